"""Exact ground truth on finite-state stationary binary processes.

A `MarkovBinaryModel` is a stationary chain with a designated hit set; the
binary process is X_n = 1{state_n in hit}.  Dynamic programming over
(state, count) gives the exact law of the visit count, exact correlation
terms R1/R2, hybrid independent-prefix laws, and the telescoping residual.
A brute-force path enumeration provides an independent cross-check.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bound import BoundInputs
from .errors import ResourceLimitError, ValidationError
from .pmf import PMF, binomial_pmf

_MAX_DP_N = 4096
_MAX_CORR_N = 2048
_MAX_TELE_N = 512
_MAX_ENUM_PATHS = 10**8


def _stationary_of(P: np.ndarray) -> np.ndarray:
    """Stationary row vector by power iteration to 1e-13."""
    K = P.shape[0]
    pi = np.full(K, 1.0 / K)
    for _ in range(200_000):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < 1e-15:
            return nxt
        pi = nxt
    if np.max(np.abs(pi @ P - pi)) > 1e-13:
        raise ValidationError("power iteration failed to converge to stationarity")
    return pi


@dataclass(frozen=True)
class MarkovBinaryModel:
    P: np.ndarray
    hit: frozenset
    pi: np.ndarray = None

    def __post_init__(self):
        P = np.asarray(self.P, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValidationError("P must be a square matrix")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
            raise ValidationError("P rows must be nonnegative and sum to 1")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "hit", frozenset(int(s) for s in self.hit))
        K = P.shape[0]
        if any(not (0 <= s < K) for s in self.hit):
            raise ValidationError("hit states out of range")
        if self.pi is None:
            pi = _stationary_of(P)
        else:
            pi = np.asarray(self.pi, dtype=np.float64)
            if pi.shape != (K,) or abs(pi.sum() - 1.0) > 1e-10:
                raise ValidationError("pi must be a probability vector over states")
            if np.max(np.abs(pi @ P - pi)) > 1e-10:
                raise ValidationError("pi is not stationary for P")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    @property
    def K(self) -> int:
        return self.P.shape[0]

    @property
    def eps(self) -> float:
        """P(X_1 = 1) = stationary mass of the hit set."""
        return float(sum(self.pi[s] for s in self.hit))

    @property
    def hit_vector(self) -> np.ndarray:
        h = np.zeros(self.K)
        for s in self.hit:
            h[s] = 1.0
        return h

    def to_dict(self) -> dict:
        return {
            "states": self.K,
            "transition": [float(x) for x in self.P.ravel()],
            "stationary": [float(x) for x in self.pi],
            "hit": sorted(self.hit),
        }

    def to_json(self) -> str:
        d = self.to_dict()
        return json.dumps(
            {
                "states": d["states"],
                "transition": [float(format(x, ".17g")) for x in d["transition"]],
                "stationary": [float(format(x, ".17g")) for x in d["stationary"]],
                "hit": d["hit"],
            }
        )

    @classmethod
    def from_dict(cls, d: dict) -> "MarkovBinaryModel":
        try:
            K = int(d["states"])
            P = np.array(d["transition"], dtype=np.float64).reshape(K, K)
            hit = frozenset(int(s) for s in d["hit"])
        except (KeyError, ValueError) as e:
            raise ValidationError(f"bad model file: {e}") from e
        pi = d.get("stationary")
        if pi is not None:
            pi = np.array(pi, dtype=np.float64)
        return cls(P=P, hit=hit, pi=pi)

    @classmethod
    def from_json(cls, text: str) -> "MarkovBinaryModel":
        return cls.from_dict(json.loads(text))

    @classmethod
    def iid(cls, eps: float) -> "MarkovBinaryModel":
        """Two-state embedding of an i.i.d. Bernoulli(eps) process."""
        row = np.array([1.0 - eps, eps])
        return cls(P=np.vstack([row, row]), hit=frozenset({1}))


def _count_dp(model: MarkovBinaryModel, start: np.ndarray, n: int) -> np.ndarray:
    """Law of sum of hit indicators over n steps, starting from state law
    `start`, counting the state at every step including the first.
    Returns probs over counts 0..n."""
    K = model.K
    h = model.hit_vector.astype(bool)
    # W[c, s] = P(count = c so far, current state = s)
    W = np.zeros((n + 1, K))
    W[0, ~h] = start[~h]
    W[1, h] = start[h]
    for _ in range(n - 1):
        V = W @ model.P
        W = np.zeros_like(V)
        W[:, ~h] = V[:, ~h]
        W[1:, h] = V[:-1, h]
    return W.sum(axis=1)


def exact_count_distribution(model: MarkovBinaryModel, N: int) -> PMF:
    """Exact law of the number of hits in a stationary window of length N."""
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if N > _MAX_DP_N:
        raise ResourceLimitError(f"N={N} exceeds DP limit {_MAX_DP_N}")
    probs = _count_dp(model, model.pi, N)
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-10:
        raise ValidationError(f"DP mass drifted to {total!r}")
    return PMF(offset=0, probs=probs, mass_declared=min(total, 1.0))


def enumerate_count_distribution(model: MarkovBinaryModel, N: int) -> PMF:
    """Brute-force law of the hit count by summing all K^N path probabilities."""
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if model.K**N > _MAX_ENUM_PATHS:
        raise ResourceLimitError(f"K^N = {model.K}^{N} exceeds enumeration limit")
    K = model.K
    # all K^N paths, column i = state at time i
    paths = np.stack(
        np.meshgrid(*([np.arange(K, dtype=np.int8)] * N), indexing="ij"),
        axis=-1,
    ).reshape(-1, N)
    w = model.pi[paths[:, 0]].copy()
    for i in range(N - 1):
        w *= model.P[paths[:, i], paths[:, i + 1]]
    hits = model.hit_vector.astype(np.int64)
    counts = hits[paths].sum(axis=1)
    probs = np.bincount(counts, weights=w, minlength=N + 1)
    return PMF(offset=0, probs=probs, mass_declared=min(float(probs.sum()), 1.0))


def exact_correlation_terms(
    model: MarkovBinaryModel, N: int, p: int
) -> tuple[float, float]:
    """Exact R1 (sup over all (j, q)) and R2 for the window of length N.

    R2 = sum_{l=1}^{p-1} P(X_1 = 1, X_{l+1} = 1) via transition powers.
    R1 conditions on X_1 = 1 by restricting pi to the hit set, renormalizing,
    and propagating p steps to the start of the counting window
    S_{p+1}^{N-j}; the sup compares the conditional and unconditional window
    laws scaled by eps.
    """
    if not (2 <= p < N):
        raise ValidationError(f"need 2 <= p < N, got p={p}, N={N}")
    if N > _MAX_CORR_N:
        raise ResourceLimitError(f"N={N} exceeds limit {_MAX_CORR_N}")
    h = model.hit_vector
    eps = model.eps

    # R2: pi-weighted two-point correlations at lags 1..p-1
    r2 = 0.0
    v = model.pi * h
    for _ in range(1, p):
        v = v @ model.P
        r2 += float(v @ h)

    if eps == 0.0:
        return 0.0, r2

    # R1: window S_{p+1}^{N-j} has length L = N-j-p, L = 0..N-p.
    cond0 = (model.pi * h) / eps
    for _ in range(p):
        cond0 = cond0 @ model.P
    max_len = N - p
    law_cond = _count_laws_by_length(model, cond0, max_len)
    law_unc = _count_laws_by_length(model, model.pi, max_len)
    r1 = 0.0
    for L in range(0, max_len + 1):
        diff = eps * np.max(np.abs(law_cond[L] - law_unc[L]))
        if diff > r1:
            r1 = diff
    return r1, r2


def _count_laws_by_length(
    model: MarkovBinaryModel, start: np.ndarray, max_len: int
) -> list[np.ndarray]:
    """Laws of the hit count over windows of length 0..max_len from one DP
    sweep; entry L is a vector over counts 0..L."""
    K = model.K
    h = model.hit_vector.astype(bool)
    laws = [np.array([1.0])]
    if max_len == 0:
        return laws
    W = np.zeros((max_len + 1, K))
    W[0, ~h] = start[~h]
    W[1, h] = start[h]
    laws.append(W[:2].sum(axis=1))
    for L in range(2, max_len + 1):
        V = W @ model.P
        W = np.zeros_like(V)
        W[:, ~h] = V[:, ~h]
        W[1:, h] = V[:-1, h]
        laws.append(W[: L + 1].sum(axis=1))
    return laws


@dataclass(frozen=True)
class HybridSpec:
    j: int
    N: int
    eps: float

    def __post_init__(self):
        if not (0 <= self.j <= self.N):
            raise ValidationError(f"need 0 <= j <= N, got j={self.j}, N={self.N}")


def hybrid_distribution(model: MarkovBinaryModel, spec: HybridSpec) -> PMF:
    """Law of Binomial(j, eps) + S_1^{N-j}: an independent Bernoulli prefix
    convolved with the dependent tail (equal in law to S_{j+1}^N by
    stationarity)."""
    if abs(spec.eps - model.eps) > 1e-12:
        raise ValidationError(
            f"prefix eps {spec.eps!r} does not match model eps {model.eps!r}"
        )
    j, N = spec.j, spec.N
    if j == 0:
        return exact_count_distribution(model, N)
    prefix = binomial_pmf(j, model.eps).probs
    if j == N:
        return PMF(offset=0, probs=prefix)
    tail = exact_count_distribution(model, N - j).probs
    probs = np.convolve(prefix, tail)
    return PMF(offset=0, probs=probs, mass_declared=min(float(probs.sum()), 1.0))


def telescoping_residual(model: MarkovBinaryModel, N: int, k: int) -> float:
    """Numerical defect of the identity
    P(S_1^N = k) - P(Binomial(N, eps) = k) = sum_j [hybrid(j)_k - hybrid(j+1)_k];
    mathematically zero, returned as an absolute residual."""
    if not (0 <= k <= N):
        raise ValidationError(f"need 0 <= k <= N, got k={k}, N={N}")
    if N > _MAX_TELE_N:
        raise ResourceLimitError(f"N={N} exceeds limit {_MAX_TELE_N}")
    eps = model.eps
    dep = exact_count_distribution(model, N).prob(k)
    ind = binomial_pmf(N, eps).prob(k)
    hybrids = [
        hybrid_distribution(model, HybridSpec(j=j, N=N, eps=eps)).prob(k)
        for j in range(N + 1)
    ]
    tele = sum(hybrids[j] - hybrids[j + 1] for j in range(N))
    return abs((dep - ind) - tele)


def telescoping_residual_max(model: MarkovBinaryModel, N: int) -> float:
    """Max over k = 0..N of the telescoping residual, computing each hybrid
    law once."""
    if N > _MAX_TELE_N:
        raise ResourceLimitError(f"N={N} exceeds limit {_MAX_TELE_N}")
    eps = model.eps
    dep = exact_count_distribution(model, N).probs
    ind = np.zeros(N + 1)
    ind[:] = binomial_pmf(N, eps).probs
    hybrids = []
    for j in range(N + 1):
        h = hybrid_distribution(model, HybridSpec(j=j, N=N, eps=eps)).probs
        padded = np.zeros(N + 1)
        padded[: h.size] = h[: N + 1]
        hybrids.append(padded)
    tele = sum(hybrids[j] - hybrids[j + 1] for j in range(N))
    return float(np.max(np.abs((dep - ind) - tele)))
