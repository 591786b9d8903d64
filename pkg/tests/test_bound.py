import math

import numpy as np
import pytest

from poissonvisits.bound import (
    PROV_IID,
    PROV_MC,
    BoundInputs,
    assemble_total,
    default_r1_grid,
    estimate_r1_mc,
    estimate_r2_mc,
    iid_terms,
    r3_term,
)
from poissonvisits.dynamics import harvest_series
from poissonvisits.errors import ValidationError
from poissonvisits.markov import exact_correlation_terms
from poissonvisits.pmf import binomial_pmf, poisson_pmf, tv_distance
from poissonvisits.systems import IIDAdapter, MarkovAdapter


class TestInputsValidation:
    def test_p_range(self):
        with pytest.raises(ValidationError):
            BoundInputs(eps=0.1, N=10, p=1, M=2)
        with pytest.raises(ValidationError):
            BoundInputs(eps=0.1, N=10, p=10, M=2)

    def test_M_range(self):
        with pytest.raises(ValidationError):
            BoundInputs(eps=0.1, N=10, p=2, M=10)


class TestR3:
    def test_zero_eps(self):
        assert r3_term(BoundInputs(eps=0.0, N=50, p=3, M=4)) == 0.0

    def test_value_small(self):
        # 4*(0.12 + e^{-1}/6 + 0.01)
        got = r3_term(BoundInputs(eps=0.01, N=100, p=2, M=3))
        assert got == pytest.approx(4 * (0.12 + math.exp(-1) / 6 + 0.01), rel=1e-12)
        assert got == pytest.approx(0.765253, abs=1e-6)

    def test_value_m1(self):
        got = r3_term(BoundInputs(eps=0.005, N=200, p=2, M=1))
        assert got == pytest.approx(4 * (0.02 + math.exp(-1) + 0.005), rel=1e-12)
        assert got == pytest.approx(1.571518, abs=1e-6)

    def test_monotone_in_eps(self):
        for N, p, M in [(50, 2, 1), (100, 3, 4), (300, 4, 6)]:
            vals = [
                r3_term(BoundInputs(eps=e, N=N, p=p, M=M))
                for e in np.linspace(0.0, 1.0 / N, 25)
            ]
            assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


class TestAssemble:
    def test_zero_terms(self):
        bk = assemble_total(0.0, 0.0, BoundInputs(eps=0.0, N=100, p=2, M=3))
        assert bk.total == 0.0

    def test_iid_example_total(self):
        inputs = BoundInputs(eps=0.01, N=100, p=2, M=3)
        r1, r2 = iid_terms(inputs)
        bk = assemble_total(r1, r2, inputs, PROV_IID, PROV_IID)
        assert bk.total == pytest.approx(600 * 1e-4 + 0.765253, abs=1e-6)

    def test_arithmetic(self):
        inputs = BoundInputs(eps=0.01, N=100, p=2, M=3)
        bk = assemble_total(1e-4, 1e-4, inputs)
        assert bk.total == pytest.approx(600 * 2e-4 + r3_term(inputs), rel=1e-15)

    def test_total_recomputation_identity(self):
        rng = np.random.Generator(np.random.PCG64(8))
        for _ in range(50):
            N = int(rng.integers(5, 400))
            p = int(rng.integers(2, min(N, 8)))
            M = int(rng.integers(1, min(N, 9)))
            inputs = BoundInputs(eps=float(rng.random()) * 0.05, N=N, p=p, M=M)
            r1, r2 = float(rng.random()) * 1e-3, float(rng.random()) * 1e-3
            bk = assemble_total(r1, r2, inputs)
            assert bk.total == 2.0 * N * M * (r1 + r2) + bk.r3


class TestIIDTerms:
    def test_values(self):
        assert iid_terms(BoundInputs(eps=0.1, N=50, p=4, M=1)) == (0.0, pytest.approx(0.03))
        assert iid_terms(BoundInputs(eps=0.3, N=50, p=2, M=1)) == (0.0, pytest.approx(0.09))
        assert iid_terms(BoundInputs(eps=0.0, N=50, p=5, M=1)) == (0.0, 0.0)


def test_theorem_inequality_iid_grid():
    """Full inequality with analytic R1/R2 on an i.i.d. grid."""
    for N in (30, 100, 300):
        for eps in (0.002, 0.01, 0.02):
            lam = N * eps
            tv = tv_distance(binomial_pmf(N, eps), poisson_pmf(lam))
            for p in (2, 3, 4):
                for M in range(1, 7):
                    inputs = BoundInputs(eps=eps, N=N, p=p, M=M)
                    r1, r2 = iid_terms(inputs)
                    bk = assemble_total(r1, r2, inputs, PROV_IID, PROV_IID)
                    assert tv <= bk.total + 1e-12


class TestR2MC:
    def test_all_zero(self):
        series = [np.zeros(100, dtype=np.uint8) for _ in range(4)]
        est, se = estimate_r2_mc(series, 3)
        assert est == 0.0

    def test_all_one(self):
        series = [np.ones(100, dtype=np.uint8) for _ in range(4)]
        est, _ = estimate_r2_mc(series, 3)
        assert est == pytest.approx(2.0)

    def test_iid_matches_analytic(self):
        iid = IIDAdapter(0.1)
        series = harvest_series(iid, None, 50, 20_000, 0, seed=606)
        est, se = estimate_r2_mc(series, 4)
        assert abs(est - 0.03) <= 3 * se

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            estimate_r2_mc([], 3)


class TestR1MC:
    def test_iid_indistinguishable_from_zero(self):
        iid = IIDAdapter(0.1)
        series = harvest_series(iid, None, 50, 20_000, 0, seed=607)
        inputs = BoundInputs(eps=0.1, N=20, p=4, M=2)
        est, se = estimate_r1_mc(series, inputs)
        assert abs(est) <= 4 * se

    def test_all_one_series(self):
        series = [np.ones(64, dtype=np.uint8) for _ in range(3)]
        inputs = BoundInputs(eps=1.0, N=16, p=3, M=2)
        grid = [(j, 16 - j - 3) for j in range(0, 14)] + [(0, 2), (1, 0)]
        est, _ = estimate_r1_mc(series, inputs, grid)
        assert est == 0.0

    def test_markov_matches_exact(self, two_state_model):
        N, p = 12, 3
        er1, er2 = exact_correlation_terms(two_state_model, N, p)
        adapter = MarkovAdapter(two_state_model)
        series = harvest_series(adapter, None, 100, 10_050, 0, seed=608)
        grid = [(j, q) for j in range(0, N - p + 1) for q in range(0, N - j - p + 1)]
        r1, r1_se = estimate_r1_mc(series, BoundInputs(eps=two_state_model.eps, N=N, p=p, M=2), grid)
        r2, r2_se = estimate_r2_mc(series, p)
        assert abs(r1 - er1) <= 4 * r1_se
        assert abs(r2 - er2) <= 4 * r2_se

    def test_grid_out_of_range_rejected(self):
        series = [np.zeros(64, dtype=np.uint8)]
        inputs = BoundInputs(eps=0.1, N=16, p=3, M=2)
        with pytest.raises(ValidationError):
            estimate_r1_mc(series, inputs, [(0, 14)])

    def test_default_grid_respects_ranges(self):
        inputs = BoundInputs(eps=0.01, N=128, p=3, M=2)
        for j, q in default_r1_grid(inputs):
            assert 0 <= j <= 125
            assert 0 <= q <= 128 - j - 3
