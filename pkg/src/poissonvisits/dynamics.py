"""Statistical operations on orbits: invariant-measure estimates, ball-hit
series, visit-count sampling, bad-center detection, and the return-time tail
functional.

Seeding: every operation takes a (master_seed, *stream) path that is fed to
numpy's SeedSequence, so results are reproducible and independent streams
never collide.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import EmptyBallError, ValidationError
from .pmf import PMF
from .systems import BallTarget, BinaryAdapter, HitSeries, MapSystem

DEFAULT_GAP = 1024
DEFAULT_BATCHES = 64


_STREAM_IDS = {"measure": 1, "hits": 2, "series": 3, "counts": 4, "centers": 5}


def _seed_path(seed, tag: str) -> list[int]:
    """Derivation path fed to SeedSequence: (master seed, ..., stream id)."""
    if isinstance(seed, (int, np.integer)):
        base = [int(seed)]
    else:
        base = [int(s) for s in seed]
    return base + [_STREAM_IDS[tag]]


def _rng(seed_path) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed_path)))


def iterate(system: MapSystem, y, k: int):
    """k-fold image T^k(y)."""
    if k < 0:
        raise ValidationError(f"k must be nonnegative, got {k}")
    if k == 0:
        return tuple(float(c) for c in y)
    return system.iterate(y, k)


@dataclass(frozen=True)
class MeasureEstimate:
    eps_hat: float
    std_error: float
    iterations: int
    escapes: int


def annulus_measure(
    system, x, r_lo: float, r_hi: float, iterations: int, seed,
    n_batches: int = DEFAULT_BATCHES,
) -> MeasureEstimate:
    """Birkhoff estimate of mu{y : r_lo < d(x, y) <= r_hi} with batch-means
    standard error."""
    if not (0.0 <= r_lo <= r_hi):
        raise ValidationError(f"need 0 <= r_lo <= r_hi, got ({r_lo}, {r_hi})")
    if r_lo == r_hi:
        return MeasureEstimate(0.0, 0.0, iterations, 0)
    rng = _rng(_seed_path(seed, "measure"))
    state = system.initial_state(rng)
    hits, _, escapes = system.annulus_hits(
        state, iterations, n_batches, x, r_lo, r_hi
    )
    per_batch = iterations // n_batches
    used = per_batch * n_batches
    means = hits / per_batch
    eps_hat = float(hits.sum()) / used
    se = float(np.std(means, ddof=1) / math.sqrt(n_batches))
    return MeasureEstimate(eps_hat, se, used, escapes)


def estimate_measure(
    system, target: BallTarget, iterations: int, seed,
    n_batches: int = DEFAULT_BATCHES,
) -> MeasureEstimate:
    """Fraction of orbit time spent inside the target ball."""
    if iterations < 10**4:
        raise ValidationError(f"need >= 1e4 iterations, got {iterations}")
    if isinstance(system, BinaryAdapter):
        rng = _rng(_seed_path(seed, "measure"))
        bits = system.hit_bits_rng(rng, iterations)
        n_batches = min(n_batches, iterations)
        per = iterations // n_batches
        means = bits[: per * n_batches].reshape(n_batches, per).mean(axis=1)
        est = MeasureEstimate(
            float(bits.mean()),
            float(np.std(means, ddof=1) / math.sqrt(n_batches)),
            iterations, 0,
        )
    else:
        est = annulus_measure(system, target.center, 0.0, target.r,
                              iterations, seed, n_batches)
    if est.eps_hat == 0.0:
        raise EmptyBallError(
            f"target ball r={target.r} at {target.center} received no orbit mass"
        )
    return est


def orbit_hits(system, target: BallTarget, y0, N: int, seed) -> HitSeries:
    """Bit series bits[j] = 1{T^j(y0) in B_r(x)} for j = 0..N-1."""
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if isinstance(system, BinaryAdapter):
        rng = _rng(_seed_path(seed, "hits"))
        bits = system.hit_bits_rng(rng, N)
    else:
        state = system.state_from_point(y0)
        bits, _ = system.hit_bits(state, N, target.center, target.r)
    return HitSeries(bits=bits, origin=0, target=target,
                     seed=tuple(_seed_path(seed, "hits")))


def harvest_series(
    system, target: Optional[BallTarget], n_series: int, length: int,
    gap: int, seed,
) -> list[HitSeries]:
    """n_series disjoint hit series cut from one long orbit, gap-separated."""
    rng = _rng(_seed_path(seed, "series"))
    out = []
    if isinstance(system, BinaryAdapter):
        for i in range(n_series):
            bits = system.hit_bits_rng(rng, length)
            out.append(HitSeries(bits=bits, origin=i * (length + gap),
                                 target=target, seed=tuple(_seed_path(seed, "series"))))
        return out
    state = system.initial_state(rng)
    stride = length + gap
    for i in range(n_series):
        bits, state = system.hit_bits(state, length, target.center, target.r)
        if gap:
            pts, state = system.orbit_points(state, 1, gap)
        out.append(HitSeries(bits=bits, origin=i * stride, target=target,
                             seed=tuple(_seed_path(seed, "series"))))
    return out


@dataclass(frozen=True)
class VisitCountSample:
    pmf: PMF
    counts: np.ndarray
    N_used: int
    eps_hat: float
    eps_se: float
    escapes: int
    low_sample_warning: bool


def sample_visit_counts(
    system, target: Optional[BallTarget], t: float, n_samples: int, gap: int,
    seed, measure_iterations: int = 10**6,
    eps_known: Optional[float] = None,
) -> VisitCountSample:
    """Empirical law of the visit count over windows of ``floor(t/eps)+1``
    consecutive iterates (indices j = 0..floor(t/eps)), harvested from one
    long orbit as gap-separated segments.

    eps is the Birkhoff estimate from `estimate_measure` unless `eps_known`
    pins it (used by synthetic adapters in tests).
    """
    if t <= 0:
        raise ValidationError(f"t must be positive, got {t}")
    if n_samples < 1:
        raise ValidationError("n_samples must be positive")
    if eps_known is not None:
        eps_hat, eps_se, escapes0 = eps_known, 0.0, 0
    else:
        m = estimate_measure(system, target, measure_iterations, seed)
        eps_hat, eps_se, escapes0 = m.eps_hat, m.std_error, m.escapes
    if eps_hat <= 0:
        raise EmptyBallError("measure estimate is zero")
    n_used = int(math.floor(t / eps_hat))
    if n_used < 1:
        raise ValidationError(
            f"window floor(t/eps) = {n_used} < 1; ball too large for t={t}"
        )
    win = n_used + 1
    if isinstance(system, BinaryAdapter):
        rng = _rng(_seed_path(seed, "counts"))
        counts = system.window_counts_rng(rng, n_samples, win)
        escapes = 0
    else:
        rng = _rng(_seed_path(seed, "counts"))
        state = system.initial_state(rng)
        counts, _, escapes = system.window_counts(
            state, n_samples, win, gap, target.center, target.r
        )
    if counts.size == 0:
        raise EmptyBallError("no valid windows were collected")
    return VisitCountSample(
        pmf=PMF.from_counts(counts),
        counts=counts,
        N_used=n_used,
        eps_hat=eps_hat,
        eps_se=eps_se,
        escapes=escapes0 + escapes,
        low_sample_warning=counts.size < 100,
    )


@dataclass(frozen=True)
class BadCenterReport:
    flag: bool
    first_bad_k: Optional[int]
    margin: float
    k_max: int
    note: str = ""


def detect_bad_center(system: MapSystem, target: BallTarget) -> BadCenterReport:
    """Near-periodicity test: flag the center x if d(x, T^k x) <= (A^k + 1) r
    for some k up to floor(log(1/r) / (6 log A)).

    The test is the necessary condition the overlap B_r(x) ∩ T^k(B_r(x)) != {}
    implies, evaluated on the exact orbit of the center.
    """
    if not system.is_map:
        raise ValidationError("bad-center detection requires a geometric system")
    A = system.spec.A
    r = target.r
    k_max = int(math.floor(math.log(1.0 / r) / (6.0 * math.log(A))))
    if k_max < 1:
        return BadCenterReport(
            flag=False, first_bad_k=None, margin=float("inf"), k_max=0,
            note="k-range empty: r too large for this expansion constant",
        )
    x = tuple(float(c) for c in target.center)
    flag = False
    first_bad = None
    margin = float("inf")
    y = x
    for k in range(1, k_max + 1):
        y = system.iterate(y, 1)
        d = system.distance(x, y)
        m = d - (A**k + 1.0) * r
        margin = min(margin, m)
        if m <= 0 and not flag:
            flag = True
            first_bad = k
    return BadCenterReport(flag=flag, first_bad_k=first_bad, margin=margin,
                           k_max=k_max)


def sample_centers(system: MapSystem, n: int, seed) -> list[tuple]:
    """n centers drawn from the physical measure: widely spaced orbit points."""
    rng = _rng(_seed_path(seed, "centers"))
    state = system.initial_state(rng)
    pts, _ = system.orbit_points(state, n, 4096)
    return [tuple(float(c) for c in row) for row in pts]


# ---------------------------------------------------------------------------
# return-time tail functional


@dataclass(frozen=True)
class ReturnTimeTail:
    """Distribution of a return time R under the reference measure; either
    geometric(theta) on {1, 2, ...} or an explicit table {k: mass}."""

    kind: str  # "geometric" | "table"
    theta: float = 0.0
    table: Optional[dict] = None

    def __post_init__(self):
        if self.kind == "geometric":
            if not (0.0 <= self.theta < 1.0):
                raise ValidationError(
                    f"geometric tail needs theta in [0,1), got {self.theta}"
                )
        elif self.kind == "table":
            if not self.table:
                raise ValidationError("table tail must be nonempty")
            tot = 0.0
            for k, m in self.table.items():
                if k < 1 or m < 0:
                    raise ValidationError("table entries must have k>=1, mass>=0")
                tot += m
            if tot > 1.0 + 1e-12:
                raise ValidationError(f"table mass {tot} exceeds 1")
        else:
            raise ValidationError(f"unknown tail kind {self.kind!r}")

    @classmethod
    def geometric(cls, theta: float) -> "ReturnTimeTail":
        return cls(kind="geometric", theta=theta)

    @classmethod
    def explicit(cls, table: dict) -> "ReturnTimeTail":
        return cls(kind="table", table=dict(table))


def omega(tail: ReturnTimeTail, s: float) -> float:
    """Tail functional Omega(s) = sqrt(sum_{k >= s} k * m{R = k})."""
    if s < 0:
        raise ValidationError(f"s must be nonnegative, got {s}")
    k0 = max(1, math.ceil(s))
    if tail.kind == "table":
        total = sum(k * m for k, m in tail.table.items() if k >= k0)
        return math.sqrt(total)
    theta = tail.theta
    if theta == 0.0:
        # R = 1 almost surely
        return 1.0 if k0 <= 1 else 0.0
    # m{R=k} = (1-theta) theta^(k-1); sum partial terms until the closed-form
    # remainder sum_{k>K} k m{R=k} = theta^K ((K+1)(1-theta)+theta)/(1-theta)
    # drops below 1e-14
    total = 0.0
    k = k0
    term = (1.0 - theta) * theta ** (k0 - 1)
    while True:
        total += k * term
        remainder = theta**k * ((k + 1) * (1.0 - theta) + theta) / (1.0 - theta)
        if remainder < 1e-14:
            break
        k += 1
        term *= theta
    return math.sqrt(total)
