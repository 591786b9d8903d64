"""Error bound R(eps, N, p, M) = 2NM[R1 + R2] + R3 for the Poisson
approximation of a sum of N stationary {0,1}-valued variables.

R1 is a sup of centered joint/marginal window probabilities, R2 a short-range
correlation sum, R3 a closed form.  R1 and R2 can come from three routes:
exact transfer-matrix computation (see `markov`), the analytic i.i.d.
specialization, or Monte-Carlo estimation from hit series.  A Monte-Carlo R1
is a max over a finite (j, q) grid and therefore only a lower bound of the
true sup; it is tagged as such and must not be used to certify the
inequality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

PROV_EXACT = "exact"
PROV_IID = "iid-analytic"
PROV_MC = "monte-carlo"


@dataclass(frozen=True)
class BoundInputs:
    eps: float
    N: int
    p: int
    M: int

    def __post_init__(self):
        if not (0.0 <= self.eps <= 1.0):
            raise ValidationError(f"eps out of [0,1]: {self.eps}")
        if not (2 <= self.p < self.N):
            raise ValidationError(f"need 2 <= p < N, got p={self.p}, N={self.N}")
        if not (1 <= self.M <= self.N - 1):
            raise ValidationError(f"need 1 <= M <= N-1, got M={self.M}, N={self.N}")


@dataclass(frozen=True)
class BoundBreakdown:
    r1: float
    r2: float
    r3: float
    total: float
    r1_provenance: str = PROV_EXACT
    r2_provenance: str = PROV_EXACT
    r1_se: float = 0.0
    r2_se: float = 0.0

    @property
    def certifies(self) -> bool:
        """True when no term is a possibly-downward-biased MC estimate of a sup."""
        return self.r1_provenance != PROV_MC


def r3_term(inputs: BoundInputs) -> float:
    """Closed form 4*(M*p*eps*(1+N*eps) + (eps*N)^M e^{-N*eps}/M! + N*eps^2)."""
    eps, N, p, M = inputs.eps, inputs.N, inputs.p, inputs.M
    if eps == 0.0:
        return 0.0
    lam = N * eps
    # (lam^M / M!) e^{-lam} in log space to survive large M, lam
    mid = math.exp(M * math.log(lam) - math.lgamma(M + 1.0) - lam)
    return 4.0 * (M * p * eps * (1.0 + lam) + mid + N * eps * eps)


def assemble_total(
    r1: float,
    r2: float,
    inputs: BoundInputs,
    r1_provenance: str = PROV_EXACT,
    r2_provenance: str = PROV_EXACT,
    r1_se: float = 0.0,
    r2_se: float = 0.0,
) -> BoundBreakdown:
    """Combine the three terms into the full bound 2NM(r1+r2) + r3."""
    if r1 < 0 or r2 < 0:
        raise ValidationError("r1 and r2 must be nonnegative")
    r3 = r3_term(inputs)
    total = 2.0 * inputs.N * inputs.M * (r1 + r2) + r3
    return BoundBreakdown(
        r1=r1, r2=r2, r3=r3, total=total,
        r1_provenance=r1_provenance, r2_provenance=r2_provenance,
        r1_se=r1_se, r2_se=r2_se,
    )


def iid_terms(inputs: BoundInputs) -> tuple[float, float]:
    """R1 and R2 for independent indicators: the joint/marginal difference
    factors away exactly (R1 = 0) and R2 = (p-1) * eps^2."""
    return 0.0, (inputs.p - 1) * inputs.eps * inputs.eps


def _as_bit_arrays(series: Iterable) -> list[np.ndarray]:
    out = []
    for s in series:
        bits = np.asarray(getattr(s, "bits", s), dtype=np.float64)
        if bits.ndim != 1:
            raise ValidationError("each series must be a 1-d bit sequence")
        out.append(bits)
    if not out:
        raise ValidationError("at least one series required")
    return out


def _jackknife_se(per_series_num: np.ndarray, per_series_den: np.ndarray) -> float:
    """Leave-one-series-out standard error of a ratio-of-sums statistic."""
    n = per_series_num.shape[0]
    if n < 2:
        return float("nan")
    tot_num = per_series_num.sum(axis=0)
    tot_den = per_series_den.sum(axis=0)
    loo = (tot_num - per_series_num) / np.maximum(tot_den - per_series_den, 1.0)
    if loo.ndim > 1:
        loo = loo.sum(axis=1)
    return float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def estimate_r2_mc(series: Iterable, p: int) -> tuple[float, float]:
    """Monte-Carlo estimate of sum_{l=1}^{p-1} E[X_1 X_{l+1}] from stationary
    hit series, with a jackknife standard error over series."""
    if p < 2:
        raise ValidationError(f"p must be >= 2, got {p}")
    arrs = _as_bit_arrays(series)
    lags = range(1, p)
    nums = np.zeros((len(arrs), p - 1))
    dens = np.zeros((len(arrs), p - 1))
    for i, bits in enumerate(arrs):
        if bits.size < p:
            raise ValidationError(f"series {i} shorter than p={p}")
        for j, lag in enumerate(lags):
            nums[i, j] = float(np.dot(bits[:-lag], bits[lag:]))
            dens[i, j] = bits.size - lag
    est = float(np.sum(nums.sum(axis=0) / dens.sum(axis=0)))
    return est, _jackknife_se(nums, dens)


def default_r1_grid(inputs: BoundInputs) -> list[tuple[int, int]]:
    """Default (j, q) sampling plan: j on a 16-point stride, q up to where
    P(S = q) stops being negligible (about 4*ceil(N*eps) + 8)."""
    N, p = inputs.N, inputs.p
    stride = max(1, math.ceil((N - p) / 16))
    q_cap = 4 * math.ceil(N * inputs.eps) + 8
    grid = []
    js = list(range(0, N - p + 1, stride))
    if js[-1] != N - p:
        js.append(N - p)
    for j in js:
        for q in range(0, min(N - j - p, q_cap) + 1):
            grid.append((j, q))
    return grid


def estimate_r1_mc(
    series: Iterable,
    inputs: BoundInputs,
    grid: Sequence[tuple[int, int]] | None = None,
) -> tuple[float, float]:
    """Monte-Carlo lower bound of the R1 sup over a (j, q) grid.

    For each grid point both expectations, E[1_{X_1=1} 1_{S_{p+1}^{N-j}=q}]
    and eps * E[1_{S_{p+1}^{N-j}=q}], are estimated from the same windows.
    Returns (max over grid, jackknife SE of that max over series).
    """
    N, p = inputs.N, inputs.p
    if grid is None:
        grid = default_r1_grid(inputs)
    if not grid:
        raise ValidationError("grid must be nonempty")
    for (j, q) in grid:
        if not (0 <= j <= N - p and 0 <= q <= N - j - p):
            raise ValidationError(f"grid point out of range: (j={j}, q={q})")
    arrs = _as_bit_arrays(series)
    for i, bits in enumerate(arrs):
        if bits.size < N:
            raise ValidationError(f"series {i} shorter than N={N}")

    js = sorted({j for j, _ in grid})
    qs_by_j = {j: sorted({q for jj, q in grid if jj == j}) for j in js}
    q_max = max(q for _, q in grid)

    n_series = len(arrs)
    # per (series, grid point): counts of joint and marginal events
    joint = np.zeros((n_series, len(grid)))
    marg = np.zeros((n_series, len(grid)))
    wins = np.zeros(n_series)
    eps_num = np.zeros(n_series)
    idx_of = {jq: i for i, jq in enumerate(grid)}

    for i, bits in enumerate(arrs):
        n_win = bits.size - N + 1
        wins[i] = n_win
        x1 = bits[:n_win]
        eps_num[i] = float(x1.sum())
        csum = np.concatenate([[0.0], np.cumsum(bits)])
        for j in js:
            # S_{p+1}^{N-j} over window at origin o: bits[o+p .. o+N-j-1]
            length = N - j - p
            if length <= 0:
                s = np.zeros(n_win)
            else:
                s = csum[p + length : p + length + n_win] - csum[p : p + n_win]
            s = np.minimum(np.rint(s).astype(np.int64), q_max + 1)
            for q in qs_by_j[j]:
                hit = s == q
                g = idx_of[(j, q)]
                joint[i, g] = float(np.sum(x1 * hit))
                marg[i, g] = float(np.sum(hit))

    tot_w = wins.sum()
    eps_hat = eps_num.sum() / tot_w
    diffs = joint.sum(axis=0) / tot_w - eps_hat * (marg.sum(axis=0) / tot_w)
    est = float(np.max(np.abs(diffs)))

    if n_series >= 2:
        loo_stats = np.empty(n_series)
        for i in range(n_series):
            w = tot_w - wins[i]
            e = (eps_num.sum() - eps_num[i]) / w
            d = (joint.sum(axis=0) - joint[i]) / w - e * (
                (marg.sum(axis=0) - marg[i]) / w
            )
            loo_stats[i] = np.max(np.abs(d))
        se = float(
            np.sqrt(
                (n_series - 1)
                / n_series
                * np.sum((loo_stats - loo_stats.mean()) ** 2)
            )
        )
    else:
        se = float("nan")
    return est, se
