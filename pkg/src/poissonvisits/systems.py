"""Chaotic map systems and synthetic binary-process adapters.

Geometric systems (cat, henon, lozi, doubling) expose orbit iteration, a
metric, and numba kernels for the heavy Birkhoff loops.  The cat map runs in
uint64 fixed point (coordinates are u / 2^64), which makes every step exact
modular arithmetic: orbits are reproducible bit for bit and never collapse
onto short floating-point cycles.  Adapters (iid:<eps>, markov:<file>,
allhit, allzero) produce hit series directly and carry no geometry.

Registry names: cat, henon, lozi, doubling, iid:<eps>, markov:<path>,
allhit, allzero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numba import njit

from .errors import EscapedBasinError, ValidationError
from .markov import MarkovBinaryModel

TWO64 = 2.0**64

MAP_HENON = 0
MAP_LOZI = 1
MAP_DOUBLING = 2


@dataclass(frozen=True)
class SystemSpec:
    name: str
    dimension: int
    params: tuple
    metric: str  # "flat-torus" | "euclidean"
    A: float
    alpha: float
    burn_in: int
    start: tuple
    escape_radius: float = 0.0

    def __post_init__(self):
        if self.A < 2.0:
            raise ValidationError(f"expansion constant A must be >= 2, got {self.A}")
        if not (0.0 < self.alpha < 1.0):
            raise ValidationError(f"alpha must lie in (0,1), got {self.alpha}")


@dataclass(frozen=True)
class BallTarget:
    center: tuple
    r: float

    def __post_init__(self):
        if not (0.0 < self.r < 1.0):
            raise ValidationError(f"radius must lie in (0,1), got {self.r}")


@dataclass(frozen=True)
class HitSeries:
    bits: np.ndarray
    origin: int
    target: Optional[BallTarget]
    seed: tuple

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.size < 1:
            raise ValidationError("HitSeries must be nonempty")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)


# ---------------------------------------------------------------------------
# cat map kernels (uint64 fixed point on the 2-torus)

U1 = np.uint64(1)


@njit(nogil=True, inline="always")
def _torus_d2(u, v, cu, cv):
    du = u - cu
    du = min(du, np.uint64(0) - du)
    dv = v - cv
    dv = min(dv, np.uint64(0) - dv)
    fu = np.float64(du) / TWO64
    fv = np.float64(dv) / TWO64
    return fu * fu + fv * fv


@njit(nogil=True)
def _cat_annulus(u, v, iterations, n_batches, cu, cv, r2_lo, r2_hi, thresh):
    """Hits per batch for the annulus r2_lo < d^2 <= r2_hi; `thresh` is a
    uint64 cheap-reject bound on each coordinate offset."""
    per_batch = iterations // n_batches
    hits = np.zeros(n_batches, np.int64)
    for b in range(n_batches):
        c = 0
        for _ in range(per_batch):
            du = u - cu
            du = min(du, np.uint64(0) - du)
            if du <= thresh:
                d2 = _torus_d2(u, v, cu, cv)
                if r2_lo < d2 <= r2_hi:
                    c += 1
            u2 = u + u + v
            v = u + v
            u = u2
        hits[b] = c
    return hits, u, v


@njit(nogil=True)
def _cat_counts(u, v, n_samples, win, gap, cu, cv, r2, thresh):
    counts = np.empty(n_samples, np.int64)
    for i in range(n_samples):
        c = 0
        for _ in range(win):
            du = u - cu
            du = min(du, np.uint64(0) - du)
            if du <= thresh and _torus_d2(u, v, cu, cv) <= r2:
                c += 1
            u2 = u + u + v
            v = u + v
            u = u2
        counts[i] = c
        for _ in range(gap):
            u2 = u + u + v
            v = u + v
            u = u2
    return counts, u, v


@njit(nogil=True)
def _cat_bits(u, v, n, cu, cv, r2):
    bits = np.empty(n, np.uint8)
    for i in range(n):
        bits[i] = 1 if _torus_d2(u, v, cu, cv) <= r2 else 0
        u2 = u + u + v
        v = u + v
        u = u2
    return bits, u, v


@njit(nogil=True)
def _cat_advance(u, v, n):
    for _ in range(n):
        u2 = u + u + v
        v = u + v
        u = u2
    return u, v


@njit(nogil=True)
def _cat_orbit_points(u, v, n, stride):
    xs = np.empty(n, np.float64)
    ys = np.empty(n, np.float64)
    for i in range(n):
        for _ in range(stride):
            u2 = u + u + v
            v = u + v
            u = u2
        xs[i] = np.float64(u) / TWO64
        ys[i] = np.float64(v) / TWO64
    return xs, ys, u, v


# ---------------------------------------------------------------------------
# plane map kernels (henon, lozi in the euclidean plane; doubling on the
# 1-torus, which ignores the y coordinate)


@njit(nogil=True, inline="always")
def _plane_step(map_id, x, y, a, b):
    if map_id == MAP_HENON:
        return 1.0 - a * x * x + y, b * x
    elif map_id == MAP_LOZI:
        return 1.0 - a * abs(x) + y, b * x
    else:  # doubling
        return (x + x) % 1.0, 0.0


@njit(nogil=True, inline="always")
def _plane_d2(map_id, x, y, cx, cy):
    if map_id == MAP_DOUBLING:
        dx = abs(x - cx) % 1.0
        dx = min(dx, 1.0 - dx)
        return dx * dx
    dx = x - cx
    dy = y - cy
    return dx * dx + dy * dy


@njit(nogil=True)
def _plane_annulus(map_id, x, y, a, b, iterations, n_batches, cx, cy,
                   r2_lo, r2_hi, esc2):
    per_batch = iterations // n_batches
    hits = np.zeros(n_batches, np.int64)
    escapes = 0
    x0, y0 = x, y
    for bt in range(n_batches):
        c = 0
        for _ in range(per_batch):
            d2 = _plane_d2(map_id, x, y, cx, cy)
            if r2_lo < d2 <= r2_hi:
                c += 1
            x, y = _plane_step(map_id, x, y, a, b)
            if esc2 > 0.0 and x * x + y * y > esc2:
                escapes += 1
                x, y = x0, y0
        hits[bt] = c
    return hits, x, y, escapes


@njit(nogil=True)
def _plane_counts(map_id, x, y, a, b, n_samples, win, gap, cx, cy, r2, esc2):
    counts = np.empty(n_samples, np.int64)
    escapes = 0
    x0, y0 = x, y
    i = 0
    attempts = 0
    while i < n_samples and attempts < 2 * n_samples + 16:
        attempts += 1
        c = 0
        bad = False
        for _ in range(win):
            if _plane_d2(map_id, x, y, cx, cy) <= r2:
                c += 1
            x, y = _plane_step(map_id, x, y, a, b)
            if esc2 > 0.0 and x * x + y * y > esc2:
                escapes += 1
                x, y = x0, y0
                bad = True
                break
        if bad:
            continue  # aborted segment: resample from the reset point
        counts[i] = c
        i += 1
        for _ in range(gap):
            x, y = _plane_step(map_id, x, y, a, b)
            if esc2 > 0.0 and x * x + y * y > esc2:
                escapes += 1
                x, y = x0, y0
                break
    return counts[:i], x, y, escapes


@njit(nogil=True)
def _plane_bits(map_id, x, y, a, b, n, cx, cy, r2, esc2):
    bits = np.empty(n, np.uint8)
    esc_at = -1
    for i in range(n):
        bits[i] = 1 if _plane_d2(map_id, x, y, cx, cy) <= r2 else 0
        x, y = _plane_step(map_id, x, y, a, b)
        if esc2 > 0.0 and x * x + y * y > esc2:
            esc_at = i + 1
            break
    return bits, x, y, esc_at


@njit(nogil=True)
def _plane_advance(map_id, x, y, a, b, n, esc2):
    esc_at = -1
    for i in range(n):
        x, y = _plane_step(map_id, x, y, a, b)
        if esc2 > 0.0 and x * x + y * y > esc2:
            esc_at = i + 1
            break
    return x, y, esc_at


@njit(nogil=True)
def _plane_orbit_points(map_id, x, y, a, b, n, stride, esc2):
    xs = np.empty(n, np.float64)
    ys = np.empty(n, np.float64)
    x0, y0 = x, y
    for i in range(n):
        for _ in range(stride):
            x, y = _plane_step(map_id, x, y, a, b)
            if esc2 > 0.0 and x * x + y * y > esc2:
                x, y = x0, y0
        xs[i] = x
        ys[i] = y
    return xs, ys, x, y


# ---------------------------------------------------------------------------
# systems


def _to_fixed(x: float) -> np.uint64:
    return np.uint64(int(math.floor((x % 1.0) * TWO64)) % (1 << 64))


def _from_fixed(u: np.uint64) -> float:
    return float(u) / TWO64


def torus_distance(a, b) -> float:
    d2 = 0.0
    for xa, xb in zip(a, b):
        d = abs((xa - xb) % 1.0)
        d = min(d, 1.0 - d)
        d2 += d * d
    return math.sqrt(d2)


def euclidean_distance(a, b) -> float:
    return math.sqrt(sum((xa - xb) ** 2 for xa, xb in zip(a, b)))


class MapSystem:
    """Base for geometric systems; subclasses wire the numba kernels."""

    is_map = True

    def __init__(self, spec: SystemSpec):
        self.spec = spec

    @property
    def name(self) -> str:
        return self.spec.name

    def distance(self, a, b) -> float:
        if self.spec.metric == "flat-torus":
            return torus_distance(a, b)
        return euclidean_distance(a, b)

    # subclass API -----------------------------------------------------
    def iterate(self, y, k: int):
        raise NotImplementedError

    def initial_state(self, rng: np.random.Generator):
        raise NotImplementedError

    def annulus_hits(self, state, iterations, n_batches, center, r_lo, r_hi):
        raise NotImplementedError

    def window_counts(self, state, n_samples, win, gap, center, r):
        raise NotImplementedError

    def hit_bits(self, state, n, center, r):
        raise NotImplementedError

    def orbit_points(self, state, n, stride):
        raise NotImplementedError


class CatMap(MapSystem):
    """Hyperbolic toral automorphism T(x, y) = (2x + y, x + y) mod 1."""

    MATRIX_NORM = (3.0 + math.sqrt(5.0)) / 2.0

    def __init__(self, spec: SystemSpec | None = None):
        if spec is None:
            # ||DT|| = ||DT^-1|| = (3+sqrt5)/2, D^2 T = 0
            spec = SystemSpec(
                name="cat", dimension=2, params=(), metric="flat-torus",
                A=2.0 * self.MATRIX_NORM, alpha=1.0 / self.MATRIX_NORM,
                burn_in=1024, start=(0.2137, 0.6180),
            )
        super().__init__(spec)

    def iterate(self, y, k: int):
        u, v = _to_fixed(y[0]), _to_fixed(y[1])
        u, v = _cat_advance(u, v, k)
        return (_from_fixed(u), _from_fixed(v))

    def initial_state(self, rng: np.random.Generator):
        u = np.uint64(rng.integers(0, 1 << 64, dtype=np.uint64))
        v = np.uint64(rng.integers(0, 1 << 64, dtype=np.uint64))
        return _cat_advance(u, v, self.spec.burn_in)

    def annulus_hits(self, state, iterations, n_batches, center, r_lo, r_hi):
        u, v = np.uint64(state[0]), np.uint64(state[1])
        thresh = np.uint64(min(int(r_hi * TWO64) + 1, (1 << 64) - 1))
        hits, u, v = _cat_annulus(
            u, v, iterations, n_batches, _to_fixed(center[0]),
            _to_fixed(center[1]), r_lo * r_lo, r_hi * r_hi, thresh,
        )
        return hits, (u, v), 0

    def window_counts(self, state, n_samples, win, gap, center, r):
        u, v = np.uint64(state[0]), np.uint64(state[1])
        thresh = np.uint64(min(int(r * TWO64) + 1, (1 << 64) - 1))
        counts, u, v = _cat_counts(
            u, v, n_samples, win, gap, _to_fixed(center[0]),
            _to_fixed(center[1]), r * r, thresh,
        )
        return counts, (u, v), 0

    def hit_bits(self, state, n, center, r):
        u, v = np.uint64(state[0]), np.uint64(state[1])
        bits, u, v = _cat_bits(
            u, v, n, _to_fixed(center[0]), _to_fixed(center[1]), r * r
        )
        return bits, (u, v)

    def orbit_points(self, state, n, stride):
        u, v = np.uint64(state[0]), np.uint64(state[1])
        xs, ys, u, v = _cat_orbit_points(u, v, n, stride)
        return np.column_stack([xs, ys]), (u, v)

    def state_from_point(self, y):
        return (_to_fixed(y[0]), _to_fixed(y[1]))


class PlaneMap(MapSystem):
    """Shared wiring for henon/lozi/doubling float64 kernels."""

    map_id: int = -1

    def __init__(self, spec: SystemSpec):
        super().__init__(spec)
        self._a = spec.params[0] if len(spec.params) > 0 else 0.0
        self._b = spec.params[1] if len(spec.params) > 1 else 0.0

    @property
    def _esc2(self) -> float:
        e = self.spec.escape_radius
        return e * e if e > 0 else 0.0

    def iterate(self, y, k: int):
        x, yy = float(y[0]), float(y[1]) if len(y) > 1 else 0.0
        x, yy, esc_at = _plane_advance(self.map_id, x, yy, self._a, self._b,
                                       k, self._esc2)
        if esc_at >= 0:
            raise EscapedBasinError(esc_at)
        return (x, yy) if self.spec.dimension == 2 else (x,)

    def initial_state(self, rng: np.random.Generator):
        sx, sy = self.spec.start[0], (
            self.spec.start[1] if len(self.spec.start) > 1 else 0.0
        )
        x = sx + 1e-3 * (rng.random() - 0.5)
        y = sy + 1e-3 * (rng.random() - 0.5)
        x, y, esc_at = _plane_advance(self.map_id, x, y, self._a, self._b,
                                      self.spec.burn_in, self._esc2)
        if esc_at >= 0:
            raise EscapedBasinError(esc_at)
        return (x, y)

    def _center2(self, center):
        return float(center[0]), float(center[1]) if len(center) > 1 else 0.0

    def annulus_hits(self, state, iterations, n_batches, center, r_lo, r_hi):
        cx, cy = self._center2(center)
        hits, x, y, escapes = _plane_annulus(
            self.map_id, state[0], state[1], self._a, self._b, iterations,
            n_batches, cx, cy, r_lo * r_lo, r_hi * r_hi, self._esc2,
        )
        return hits, (x, y), escapes

    def window_counts(self, state, n_samples, win, gap, center, r):
        cx, cy = self._center2(center)
        counts, x, y, escapes = _plane_counts(
            self.map_id, state[0], state[1], self._a, self._b, n_samples,
            win, gap, cx, cy, r * r, self._esc2,
        )
        return counts, (x, y), escapes

    def hit_bits(self, state, n, center, r):
        cx, cy = self._center2(center)
        bits, x, y, esc_at = _plane_bits(
            self.map_id, state[0], state[1], self._a, self._b, n, cx, cy,
            r * r, self._esc2,
        )
        if esc_at >= 0:
            raise EscapedBasinError(esc_at)
        return bits, (x, y)

    def orbit_points(self, state, n, stride):
        xs, ys, x, y = _plane_orbit_points(
            self.map_id, state[0], state[1], self._a, self._b, n, stride,
            self._esc2,
        )
        if self.spec.dimension == 1:
            return xs.reshape(-1, 1), (x, y)
        return np.column_stack([xs, ys]), (x, y)

    def state_from_point(self, y):
        return (float(y[0]), float(y[1]) if len(y) > 1 else 0.0)


def _estimate_plane_A(map_id: int, a: float, b: float, spec: SystemSpec,
                      n_samples: int = 10**6) -> float:
    """Expansion constant ||DT|| + ||DT^-1|| + ||D^2 T|| sampled over the
    attractor and rounded up 10%."""
    sys_tmp = PlaneMap.__new__(PlaneMap)
    sys_tmp.spec = spec
    sys_tmp.map_id = map_id
    sys_tmp._a, sys_tmp._b = a, b
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(20240601)))
    state = sys_tmp.initial_state(rng)
    pts, _ = sys_tmp.orbit_points(state, n_samples, 1)
    x = pts[:, 0]
    # Jacobian [[j11, 1], [b, 0]] with j11 = -2ax (henon) or -a sgn x (lozi)
    if map_id == MAP_HENON:
        j11 = -2.0 * a * x
        d2t = 2.0 * a
    else:
        j11 = -a * np.sign(x)
        d2t = 0.0
    # singular values of [[j11,1],[b,0]]: s^2 solves s^4 - (j11^2+1+b^2)s^2 + b^2 = 0
    tr = j11 * j11 + 1.0 + b * b
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * b * b, 0.0))
    smax = np.sqrt((tr + disc) / 2.0)
    smin = np.sqrt(np.maximum((tr - disc) / 2.0, 1e-300))
    return 1.1 * (float(np.max(smax)) + float(np.max(1.0 / smin)) + d2t)


class HenonMap(PlaneMap):
    map_id = MAP_HENON

    def __init__(self, spec: SystemSpec | None = None, a=1.4, b=0.3):
        if spec is None:
            base = SystemSpec(
                name="henon", dimension=2, params=(a, b), metric="euclidean",
                A=2.0, alpha=0.5, burn_in=10_000, start=(0.0, 0.0),
                escape_radius=10.0,
            )
            A = _estimate_plane_A(MAP_HENON, a, b, base)
            spec = replace(base, A=A)
        super().__init__(spec)


class LoziMap(PlaneMap):
    map_id = MAP_LOZI

    def __init__(self, spec: SystemSpec | None = None, a=1.7, b=0.5):
        if spec is None:
            base = SystemSpec(
                name="lozi", dimension=2, params=(a, b), metric="euclidean",
                A=2.0, alpha=0.5, burn_in=10_000, start=(0.1, 0.1),
                escape_radius=10.0,
            )
            A = _estimate_plane_A(MAP_LOZI, a, b, base)
            spec = replace(base, A=A)
        super().__init__(spec)


class DoublingMap(PlaneMap):
    map_id = MAP_DOUBLING

    def __init__(self, spec: SystemSpec | None = None):
        if spec is None:
            spec = SystemSpec(
                name="doubling", dimension=1, params=(), metric="flat-torus",
                A=2.0, alpha=0.5, burn_in=128, start=(0.43215,),
            )
        super().__init__(spec)

    def distance(self, a, b) -> float:
        d = abs((a[0] - b[0]) % 1.0)
        return min(d, 1.0 - d)


# ---------------------------------------------------------------------------
# adapters


class BinaryAdapter:
    """Synthetic stationary binary process; no geometry."""

    is_map = False

    def __init__(self, name: str):
        self.name = name

    def hit_bits_rng(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def window_counts_rng(self, rng, n_samples: int, win: int) -> np.ndarray:
        """Counts of n_samples independent windows of length win."""
        raise NotImplementedError


class IIDAdapter(BinaryAdapter):
    def __init__(self, eps: float):
        if not (0.0 <= eps <= 1.0):
            raise ValidationError(f"iid eps out of [0,1]: {eps}")
        super().__init__(f"iid:{eps:g}")
        self.eps = eps

    def hit_bits_rng(self, rng, n):
        return (rng.random(n) < self.eps).astype(np.uint8)

    def window_counts_rng(self, rng, n_samples, win):
        return rng.binomial(win, self.eps, size=n_samples).astype(np.int64)


class ConstantAdapter(BinaryAdapter):
    def __init__(self, value: int):
        super().__init__("allhit" if value else "allzero")
        self.value = value

    def hit_bits_rng(self, rng, n):
        return np.full(n, self.value, dtype=np.uint8)

    def window_counts_rng(self, rng, n_samples, win):
        return np.full(n_samples, self.value * win, dtype=np.int64)


@njit(nogil=True)
def _markov_bits(cumP, hit_mask, state, n, uniforms):
    bits = np.empty(n, np.uint8)
    for i in range(n):
        bits[i] = hit_mask[state]
        u = uniforms[i]
        row = cumP[state]
        s = 0
        while s < row.size - 1 and u >= row[s]:
            s += 1
        state = s
    return bits, state


class MarkovAdapter(BinaryAdapter):
    def __init__(self, model: MarkovBinaryModel, name: str = "markov"):
        super().__init__(name)
        self.model = model
        self.eps = model.eps
        self._cumP = np.cumsum(np.asarray(model.P), axis=1)
        self._hit_mask = model.hit_vector.astype(np.uint8)
        self._cum_pi = np.cumsum(model.pi)

    def _start_state(self, rng) -> int:
        return int(np.searchsorted(self._cum_pi, rng.random(), side="right"))

    def hit_bits_rng(self, rng, n):
        state = self._start_state(rng)
        bits, _ = _markov_bits(self._cumP, self._hit_mask, state, n,
                               rng.random(n))
        return bits

    def window_counts_rng(self, rng, n_samples, win):
        """Consecutive windows cut from one long stationary chain."""
        counts = np.empty(n_samples, dtype=np.int64)
        state = self._start_state(rng)
        chunk = max(1, (1 << 22) // win)
        done = 0
        while done < n_samples:
            m = min(chunk, n_samples - done)
            bits, state = _markov_bits(self._cumP, self._hit_mask, state,
                                       m * win, rng.random(m * win))
            counts[done : done + m] = bits.reshape(m, win).sum(axis=1)
            done += m
        return counts


# ---------------------------------------------------------------------------
# registry


def get_system(name: str, overrides: dict | None = None):
    """Build a system or adapter from its registry name.

    Geometric systems accept SystemSpec field overrides (A, alpha, burn_in,
    start, escape_radius, params).
    """
    overrides = dict(overrides or {})
    if name.startswith("iid:"):
        return IIDAdapter(float(name.split(":", 1)[1]))
    if name.startswith("markov:"):
        path = name.split(":", 1)[1]
        with open(path) as f:
            model = MarkovBinaryModel.from_json(f.read())
        return MarkovAdapter(model, name=name)
    if name == "allhit":
        return ConstantAdapter(1)
    if name == "allzero":
        return ConstantAdapter(0)
    builders = {
        "cat": CatMap,
        "henon": HenonMap,
        "lozi": LoziMap,
        "doubling": DoublingMap,
    }
    if name not in builders:
        raise ValidationError(f"unknown system {name!r}")
    system = builders[name]()
    if overrides:
        if "params" in overrides:
            overrides["params"] = tuple(overrides["params"])
        if "start" in overrides:
            overrides["start"] = tuple(overrides["start"])
        spec = replace(system.spec, **overrides)
        system = builders[name](spec)
    return system
