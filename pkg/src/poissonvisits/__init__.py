"""Poisson approximation for sums of dependent binary indicators: exact
discrete laws, the abstract error bound, finite-state oracles, and
visit-count statistics of chaotic maps."""

from .bound import (
    BoundBreakdown,
    BoundInputs,
    assemble_total,
    estimate_r1_mc,
    estimate_r2_mc,
    iid_terms,
    r3_term,
)
from .dynamics import (
    BadCenterReport,
    MeasureEstimate,
    ReturnTimeTail,
    VisitCountSample,
    annulus_measure,
    detect_bad_center,
    estimate_measure,
    harvest_series,
    iterate,
    omega,
    orbit_hits,
    sample_centers,
    sample_visit_counts,
)
from .errors import (
    EmptyBallError,
    EscapedBasinError,
    ResourceLimitError,
    ValidationError,
)
from .harness import ExperimentConfig, run_scan
from .markov import (
    HybridSpec,
    MarkovBinaryModel,
    enumerate_count_distribution,
    exact_correlation_terms,
    exact_count_distribution,
    hybrid_distribution,
    telescoping_residual,
    telescoping_residual_max,
)
from .pmf import PMF, binomial_pmf, delta, lecam_bound, poisson_pmf, tv_distance
from .systems import (
    BallTarget,
    CatMap,
    DoublingMap,
    HenonMap,
    HitSeries,
    IIDAdapter,
    LoziMap,
    MarkovAdapter,
    SystemSpec,
    get_system,
)

__version__ = "0.1.0"
