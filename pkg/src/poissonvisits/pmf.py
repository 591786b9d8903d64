"""Finite discrete laws on the nonnegative integers.

A PMF stores a contiguous block of probabilities starting at `offset`,
together with the total mass it declares to carry (1 minus any truncated
tail).  Total variation between two PMFs treats the truncated tails as
residual mass sitting at a virtual extra point, which keeps the distance a
true metric on truncated representations.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

_MASS_TOL = 1e-9


@dataclass(frozen=True)
class PMF:
    """Immutable probability mass function on {offset, offset+1, ...}."""

    offset: int
    probs: np.ndarray
    mass_declared: float = 1.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if self.offset < 0:
            raise ValidationError(f"offset must be nonnegative, got {self.offset}")
        if probs.ndim != 1 or probs.size == 0:
            raise ValidationError("probs must be a nonempty 1-d sequence")
        if np.any(probs < 0):
            raise ValidationError("PMF entries must be nonnegative")
        if not (0.0 < self.mass_declared <= 1.0 + 1e-12):
            raise ValidationError(f"mass_declared out of (0,1]: {self.mass_declared}")
        total = float(np.sum(probs))
        if abs(total - self.mass_declared) > _MASS_TOL:
            raise ValidationError(
                f"entries sum to {total!r}, declared mass {self.mass_declared!r}"
            )

    @property
    def tail(self) -> float:
        """Mass truncated away from the stored support."""
        return max(0.0, 1.0 - self.mass_declared)

    def prob(self, k: int) -> float:
        """P(X = k), zero outside the stored support."""
        i = k - self.offset
        if 0 <= i < self.probs.size:
            return float(self.probs[i])
        return 0.0

    def mean(self) -> float:
        ks = np.arange(self.offset, self.offset + self.probs.size)
        return float(np.dot(ks, self.probs))

    def to_dict(self) -> dict:
        return {
            "offset": self.offset,
            "probs": [float(p) for p in self.probs],
            "mass_declared": self.mass_declared,
        }

    def to_json(self) -> str:
        d = self.to_dict()
        # 17 significant digits round-trips float64 exactly
        probs = ", ".join(format(p, ".17g") for p in d["probs"])
        return (
            '{"offset": %d, "probs": [%s], "mass_declared": %s}'
            % (d["offset"], probs, format(d["mass_declared"], ".17g"))
        )

    @classmethod
    def from_dict(cls, d: dict) -> "PMF":
        try:
            return cls(
                offset=int(d["offset"]),
                probs=np.array(d["probs"], dtype=np.float64),
                mass_declared=float(d.get("mass_declared", 1.0)),
            )
        except KeyError as e:
            raise ValidationError(f"PMF dict missing field {e}") from e

    @classmethod
    def from_json(cls, text: str) -> "PMF":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "PMF":
        """Empirical law of a sample of nonnegative integer counts."""
        counts = np.asarray(counts)
        if counts.size == 0:
            raise ValidationError("empty sample")
        lo = int(counts.min())
        freq = np.bincount((counts - lo).astype(np.int64)).astype(np.float64)
        return cls(offset=lo, probs=freq / counts.size, mass_declared=1.0)


def delta(k: int) -> PMF:
    """Point mass at k."""
    return PMF(offset=k, probs=np.array([1.0]))


def poisson_pmf(lam: float, tail_tolerance: float = 1e-15) -> PMF:
    """Poisson(lam) truncated at the smallest K with remaining tail below
    `tail_tolerance`, using the stable recurrence P(k+1) = P(k) * lam/(k+1)."""
    if not (lam >= 0 and math.isfinite(lam)):
        raise ValidationError(f"lambda must be finite and nonnegative, got {lam}")
    if not (0 < tail_tolerance <= 1e-6):
        raise ValidationError(f"tail_tolerance out of (0, 1e-6]: {tail_tolerance}")
    if lam == 0:
        return delta(0)
    # seed the recurrence at the mode so e^{-lam} never underflows
    k0 = int(lam)
    log_p0 = k0 * math.log(lam) - lam - math.lgamma(k0 + 1.0)
    k_max = k0 + int(60.0 * math.sqrt(lam) + 80.0)
    probs = np.zeros(k_max + 1)
    probs[k0] = math.exp(log_p0)
    for k in range(k0, k_max):
        probs[k + 1] = probs[k] * lam / (k + 1)
    for k in range(k0, 0, -1):
        probs[k - 1] = probs[k] * k / lam
    cum = np.cumsum(probs)
    # truncate at the smallest K whose remaining tail is below tolerance
    # (hard cap guards against float plateaus a few ulp short of 1)
    above = np.nonzero(1.0 - cum < tail_tolerance)[0]
    hi = int(above[0]) if above.size else k_max
    return PMF(
        offset=0, probs=probs[: hi + 1], mass_declared=min(float(cum[hi]), 1.0)
    )


def binomial_pmf(n: int, eps: float) -> PMF:
    """Exact Binomial(n, eps) law on {0, ..., n} via log-gamma weights."""
    if n < 1:
        raise ValidationError(f"N must be >= 1, got {n}")
    if not (0.0 <= eps <= 1.0):
        raise ValidationError(f"eps out of [0,1]: {eps}")
    if eps == 0.0:
        return PMF(offset=0, probs=np.concatenate([[1.0], np.zeros(n)]))
    if eps == 1.0:
        return PMF(offset=0, probs=np.concatenate([np.zeros(n), [1.0]]))
    k = np.arange(n + 1, dtype=np.float64)
    lgamma = np.vectorize(math.lgamma)
    logp = (
        lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0)
        + k * math.log(eps) + (n - k) * math.log1p(-eps)
    )
    probs = np.exp(logp)
    probs /= probs.sum()  # renormalize away the last-ulp drift
    return PMF(offset=0, probs=probs)


def tv_distance(a: PMF, b: PMF) -> float:
    """Total variation distance 0.5 * sum_k |a_k - b_k|, with the truncated
    tails compared as residual mass at a virtual point."""
    lo = min(a.offset, b.offset)
    hi = max(a.offset + a.probs.size, b.offset + b.probs.size)
    pa = np.zeros(hi - lo)
    pb = np.zeros(hi - lo)
    pa[a.offset - lo : a.offset - lo + a.probs.size] = a.probs
    pb[b.offset - lo : b.offset - lo + b.probs.size] = b.probs
    d = 0.5 * float(np.sum(np.abs(pa - pb))) + 0.5 * abs(a.tail - b.tail)
    return min(d, 1.0)


def lecam_bound(n: int, lam: float) -> float:
    """Poisson-vs-binomial total variation bound 2*lam^2 / N."""
    if n < 1:
        raise ValidationError(f"N must be >= 1, got {n}")
    if lam < 0:
        raise ValidationError(f"lambda must be nonnegative, got {lam}")
    return 2.0 * lam * lam / n
