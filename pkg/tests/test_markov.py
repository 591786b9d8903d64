import numpy as np
import pytest

from poissonvisits.errors import ResourceLimitError, ValidationError
from poissonvisits.markov import (
    HybridSpec,
    MarkovBinaryModel,
    enumerate_count_distribution,
    exact_correlation_terms,
    exact_count_distribution,
    hybrid_distribution,
    telescoping_residual,
    telescoping_residual_max,
)
from poissonvisits.pmf import binomial_pmf, tv_distance
from poissonvisits.systems import MarkovAdapter


class TestModelValidation:
    def test_bad_rows_rejected(self):
        with pytest.raises(ValidationError):
            MarkovBinaryModel(P=np.array([[0.6, 0.3], [0.5, 0.5]]), hit={0})

    def test_non_stationary_pi_rejected(self):
        with pytest.raises(ValidationError):
            MarkovBinaryModel(
                P=np.array([[0.9, 0.1], [0.8, 0.2]]),
                hit={1},
                pi=np.array([0.5, 0.5]),
            )

    def test_power_iteration_default(self, two_state_model):
        assert two_state_model.eps == pytest.approx(1.0 / 9.0, abs=1e-12)

    def test_json_roundtrip_bit_exact(self, two_state_model):
        m = MarkovBinaryModel.from_json(two_state_model.to_json())
        assert np.array_equal(m.P, two_state_model.P)
        assert np.array_equal(m.pi, two_state_model.pi)
        assert m.hit == two_state_model.hit


class TestCountDistribution:
    def test_all_ones_is_point_mass(self):
        m = MarkovBinaryModel(P=np.array([[1.0]]), hit={0})
        p = exact_count_distribution(m, 5)
        assert p.prob(5) == pytest.approx(1.0, abs=1e-14)

    def test_single_step_is_stationary_law(self, two_state_model):
        p = exact_count_distribution(two_state_model, 1)
        assert p.prob(0) == pytest.approx(8.0 / 9.0, abs=1e-12)
        assert p.prob(1) == pytest.approx(1.0 / 9.0, abs=1e-12)

    def test_enum_trivial_no_hits(self):
        m = MarkovBinaryModel(P=np.array([[1.0]]), hit=set())
        assert enumerate_count_distribution(m, 3).prob(0) == pytest.approx(1.0)

    def test_enum_iid_is_binomial(self):
        m = MarkovBinaryModel.iid(0.3)
        p = enumerate_count_distribution(m, 4)
        b = binomial_pmf(4, 0.3)
        assert np.max(np.abs(p.probs - b.probs)) < 1e-13

    def test_dp_vs_enum_on_grid(self, model_grid):
        for m in model_grid:
            N = 12 if m.K == 2 else 8
            dp = exact_count_distribution(m, N)
            en = enumerate_count_distribution(m, N)
            assert np.max(np.abs(dp.probs - en.probs)) < 1e-12

    def test_size_guards(self, two_state_model):
        with pytest.raises(ResourceLimitError):
            exact_count_distribution(two_state_model, 5000)
        with pytest.raises(ResourceLimitError):
            enumerate_count_distribution(two_state_model, 40)


class TestCorrelationTerms:
    def test_iid_embedding(self):
        m = MarkovBinaryModel.iid(0.2)
        r1, r2 = exact_correlation_terms(m, 16, 4)
        assert r1 == pytest.approx(0.0, abs=1e-15)
        assert r2 == pytest.approx(3 * 0.04, rel=1e-12)

    def test_all_ones(self):
        m = MarkovBinaryModel(P=np.array([[1.0]]), hit={0})
        r1, r2 = exact_correlation_terms(m, 10, 3)
        assert r1 == 0.0
        assert r2 == pytest.approx(2.0)

    def test_matches_path_enumeration(self, two_state_model):
        """R1/R2 against direct joint-probability enumeration, N=12, p=3."""
        m, N, p = two_state_model, 12, 3
        eps = m.eps
        paths = np.stack(
            np.meshgrid(*([np.arange(2)] * N), indexing="ij"), axis=-1
        ).reshape(-1, N)
        w = m.pi[paths[:, 0]].copy()
        for i in range(N - 1):
            w *= m.P[paths[:, i], paths[:, i + 1]]
        bits = m.hit_vector[paths]
        r2_brute = 0.0
        for lag in range(1, p):
            r2_brute += float(np.sum(w * bits[:, 0] * bits[:, lag]))
        r1_brute = 0.0
        for j in range(0, N - p + 1):
            s = bits[:, p : N - j].sum(axis=1)
            for q in range(0, N - j - p + 1):
                joint = float(np.sum(w * bits[:, 0] * (s == q)))
                marg = float(np.sum(w * (s == q)))
                r1_brute = max(r1_brute, abs(joint - eps * marg))
        r1, r2 = exact_correlation_terms(m, N, p)
        assert r1 == pytest.approx(r1_brute, abs=1e-14)
        assert r2 == pytest.approx(r2_brute, abs=1e-14)

    def test_r2_nondecreasing_in_p(self, model_grid):
        for m in model_grid[:8]:
            vals = [exact_correlation_terms(m, 32, p)[1] for p in range(2, 7)]
            assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
            assert all(v >= 0 for v in vals)


class TestHybrid:
    def test_endpoints(self, two_state_model):
        m = two_state_model
        h0 = hybrid_distribution(m, HybridSpec(j=0, N=10, eps=m.eps))
        assert np.array_equal(h0.probs, exact_count_distribution(m, 10).probs)
        hN = hybrid_distribution(m, HybridSpec(j=10, N=10, eps=m.eps))
        assert np.max(np.abs(hN.probs - binomial_pmf(10, m.eps).probs)) == 0.0

    def test_eps_mismatch_rejected(self, two_state_model):
        with pytest.raises(ValidationError):
            hybrid_distribution(two_state_model, HybridSpec(j=2, N=10, eps=0.5))

    def test_matches_simulation(self, two_state_model):
        """Hybrid law vs Monte-Carlo simulation of the hybrid process."""
        m = two_state_model
        j, N, n = 4, 10, 200_000
        law = hybrid_distribution(m, HybridSpec(j=j, N=N, eps=m.eps))
        rng = np.random.Generator(np.random.PCG64(99))
        prefix = rng.binomial(j, m.eps, size=n)
        adapter = MarkovAdapter(m)
        tail = adapter.window_counts_rng(rng, n, N - j)
        counts = prefix + tail
        for k in range(N + 1):
            p_emp = float(np.mean(counts == k))
            p = law.prob(k)
            se = max(np.sqrt(p * (1 - p) / n), 1e-6)
            assert abs(p_emp - p) <= 4 * se

    def test_interpolation_sanity(self, two_state_model):
        m, N = two_state_model, 16
        laws = [
            hybrid_distribution(m, HybridSpec(j=j, N=N, eps=m.eps))
            for j in range(N + 1)
        ]
        for j in range(N):
            dj = max(
                abs(laws[j].prob(k) - laws[j + 1].prob(k)) for k in range(N + 1)
            )
            assert tv_distance(laws[j], laws[j + 1]) <= dj * (N + 1) + 1e-12


class TestTelescoping:
    def test_iid_embedding_zero(self):
        m = MarkovBinaryModel.iid(0.15)
        for k in (0, 1, 3):
            assert telescoping_residual(m, 12, k) < 1e-14

    def test_two_state_large_window(self, two_state_model):
        m = two_state_model
        k = int(np.ceil(64 * m.eps))
        assert telescoping_residual(m, 64, k) <= 1e-10

    def test_max_residual_on_grid(self, model_grid):
        for m in model_grid[:6]:
            assert telescoping_residual_max(m, 32) <= 1e-10
