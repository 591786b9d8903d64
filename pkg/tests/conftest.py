import numpy as np
import pytest

from poissonvisits.markov import MarkovBinaryModel


def random_model(rng: np.random.Generator, K: int) -> MarkovBinaryModel:
    """Random irreducible-ish row-stochastic model with a proper hit set."""
    P = rng.dirichlet(np.ones(K) * 0.8, size=K)
    P = 0.95 * P + 0.05 / K  # keep every entry positive
    n_hit = int(rng.integers(1, K))
    hit = frozenset(rng.choice(K, size=n_hit, replace=False).tolist())
    return MarkovBinaryModel(P=P, hit=hit)


@pytest.fixture(scope="session")
def model_grid():
    """>= 20 two/three-state models with varied hit sets."""
    rng = np.random.Generator(np.random.PCG64(20240612))
    models = [random_model(rng, K) for K in [2] * 12 + [3] * 10]
    models.append(MarkovBinaryModel(P=np.array([[0.9, 0.1], [0.8, 0.2]]), hit={1}))
    return models


@pytest.fixture(scope="session")
def two_state_model():
    return MarkovBinaryModel(P=np.array([[0.9, 0.1], [0.8, 0.2]]), hit={1})


# one pass/fail line per acceptance criterion, printed after the test run
ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num, desc, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"criterion {num:2d}: {status} - {desc}{suffix}")
