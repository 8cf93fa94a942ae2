"""Cause-of-death composition forecasting with Lee-Carter on transformed densities."""

__version__ = "0.1.0"

from .composition import (  # noqa: E402
    CompositionMatrix,
    DeathCountPanel,
    build_composition,
    center_rows,
    closure,
    compute_geometric_mean,
    inverse_perturb,
    perturb,
)
from .transforms import (  # noqa: E402
    Transform,
    ZeroStrategy,
    alpha_forward,
    alpha_inverse,
    apply_zero_strategy,
    clr,
    clr_inverse,
    helmert,
    ilr,
    ilr_inverse,
    rda_forward,
    rda_inverse,
)
from .leecarter import fit, fit_classical_lc, fit_drift, forecast_k  # noqa: E402
from .pipeline import PipelineConfig, reconstruct_counts, run_point_forecast  # noqa: E402
from .tuning import evaluate_methods, make_fold_plan, score, tune_alpha  # noqa: E402
from .intervals import IntervalConfig, bootstrap_intervals, empirical_quantile  # noqa: E402
