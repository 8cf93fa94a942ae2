"""Expanding-window cross-validation, forecast scoring and method comparison."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .composition import build_composition
from .errors import ConfigError, InsufficientYears, ShapeMismatch
from .leecarter import MIN_YEARS
from .pipeline import PipelineConfig, centring_reference, run_point_forecast
from .transforms import Transform, ZeroStrategy
from .parallel import thread_count

DEFAULT_GRID = tuple(round(0.1 * i, 1) for i in range(1, 11))
SCALE = 100.0


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple  # ((train_years, validation_years), ...)
    test_years: tuple

    @property
    def n_folds(self):
        return len(self.folds)


def make_fold_plan(years, n_test, n_folds):
    """Expanding-window folds ahead of a fixed terminal test window.

    The last ``n_test`` years are held out. Of the remaining ``n`` years,
    fold ``k`` (1-based) trains on the first ``n - n_folds + k - 1`` and
    validates on the rest, so the first validation window has ``n_folds``
    years and the last has one.
    """
    years = tuple(int(y) for y in years)
    n_test, n_folds = int(n_test), int(n_folds)
    if n_test < 0 or n_folds < 1:
        raise ConfigError("n_test must be >= 0 and n_folds >= 1")
    pre = years[: len(years) - n_test]
    first_train = len(pre) - n_folds
    if first_train < MIN_YEARS:
        raise InsufficientYears(
            f"{len(years)} years cannot hold {n_test} test years and {n_folds} folds "
            f"with at least {MIN_YEARS} training years"
        )
    folds = []
    for k in range(n_folds):
        n_train = first_train + k
        folds.append((pre[:n_train], pre[n_train:]))
    return FoldPlan(tuple(folds), years[len(pre):])


def score(observed, predicted, scale=SCALE):
    """``(rmse, mae)`` over every cell, multiplied by ``scale``."""
    observed = np.asarray(observed, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if observed.shape != predicted.shape:
        raise ShapeMismatch(f"observed {observed.shape} vs predicted {predicted.shape}")
    if observed.size == 0:
        raise ShapeMismatch("nothing to score")
    diff = observed - predicted
    return scale * float(np.sqrt(np.mean(diff**2))), scale * float(np.mean(np.abs(diff)))


@dataclass(frozen=True)
class EvalResult:
    label: str
    transform: Transform
    zero_strategy: ZeroStrategy
    rmse: float
    mae: float
    fold_rmse: tuple = ()
    fold_mae: tuple = ()
    scaled: bool = True

    @property
    def alpha(self):
        return self.transform.alpha


def method_label(transform, zero_strategy):
    if transform.kind == "rda":
        return "alpha = 1 (RDA)"
    if transform.kind == "alpha":
        return f"alpha = {transform.alpha:g}"
    name = transform.kind.upper()
    if zero_strategy.kind == "omit":
        return f"{name} (zeros omitted)"
    if zero_strategy.kind == "replace":
        return f"{name} ({zero_strategy.amount:g} zero replacement)"
    return name


def _observed(panel, years, on_counts):
    sub = panel.select_years(years)
    dens = build_composition(sub).values
    if on_counts:
        return dens * sub.totals[:, None]
    return dens


def forecast_error(panel, train_years, target_years, cfg, on_counts=False, reference=None):
    """Fit on ``train_years`` and score the forecast of ``target_years``."""
    train = panel.select_years(train_years)
    fs = run_point_forecast(train, cfg, horizon=len(target_years), reference=reference)
    obs = _observed(panel, target_years, on_counts)
    pred = fs.densities
    if on_counts:
        pred = pred * panel.select_years(target_years).totals[:, None]
    return score(obs, pred, scale=1.0 if on_counts else SCALE)


CENTRING = ("window", "fold")


def cross_validate(panel, plan, cfg, on_counts=False, centring="window"):
    """Per-fold ``(rmse, mae)`` pairs for one configuration.

    ``centring="window"`` centres every fold on the geometric mean of the
    whole tuning window (all years before the test set) and keeps the same
    parts in every fold; ``"fold"`` re-estimates both from each fold's
    training years.
    """
    if centring not in CENTRING:
        raise ConfigError(f"centring must be one of {CENTRING}, got {centring!r}")
    reference = None
    if centring == "window":
        window = plan.folds[-1][0] + plan.folds[-1][1]
        reference = centring_reference(panel.select_years(window), cfg)
    return [
        forecast_error(panel, tr, va, cfg, on_counts, reference) for tr, va in plan.folds
    ]


def _cv_result(panel, plan, cfg, label, on_counts, centring="window"):
    folds = cross_validate(panel, plan, cfg, on_counts, centring)
    rm = tuple(f[0] for f in folds)
    ma = tuple(f[1] for f in folds)
    # equal fold weights regardless of validation length
    return EvalResult(
        label, cfg.transform, cfg.zero_strategy, float(np.mean(rm)), float(np.mean(ma)),
        rm, ma, not on_counts,
    )


@dataclass(frozen=True)
class TuningResult:
    best_alpha: float
    criterion: str
    table: tuple  # EvalResult rows, alpha grid first in ascending order
    baselines: tuple = field(default=())


def _map(fn, items):
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def tune_alpha(
    panel,
    grid=DEFAULT_GRID,
    plan=None,
    criterion="mae",
    zero_strategy=None,
    global_factor=False,
    baselines=(),
    on_counts=False,
    centring="window",
):
    """Pick alpha by expanding-window cross-validation.

    Every alpha in ``grid`` is scored by the equally weighted average of its
    fold errors; the minimiser under ``criterion`` (``rmse`` or ``mae``) is
    returned, ties going to the smaller alpha. ``centring`` is passed to
    :func:`cross_validate`. ``baselines`` is an optional
    sequence of ``(Transform, ZeroStrategy)`` pairs scored alongside (for
    example CLR and ILR with zeros omitted) without competing for the pick.
    """
    criterion = criterion.lower()
    if criterion not in ("rmse", "mae"):
        raise ConfigError(f"criterion must be rmse or mae, got {criterion!r}")
    grid = sorted({float(a) for a in grid})
    if not grid:
        raise ConfigError("alpha grid is empty")
    zs = zero_strategy or ZeroStrategy()
    if plan is None:
        raise ConfigError("a fold plan is required")

    def run(alpha):
        tf = Transform("rda") if alpha == 1.0 else Transform("alpha", alpha)
        cfg = PipelineConfig(tf, zs, global_factor=global_factor)
        return _cv_result(panel, plan, cfg, method_label(tf, zs), on_counts, centring)

    rows = _map(run, grid)
    best = rows[0]
    for row in rows[1:]:
        if getattr(row, criterion) < getattr(best, criterion):
            best = row

    base_rows = []
    for tf, bzs in baselines:
        cfg = PipelineConfig(tf, bzs, global_factor=global_factor)
        base_rows.append(
            _cv_result(panel, plan, cfg, method_label(tf, bzs), on_counts, centring)
        )
    return TuningResult(best.transform.alpha, criterion, tuple(rows), tuple(base_rows))


def evaluate_methods(panel, methods, n_test, global_factor=False, on_counts=False):
    """Fit each method on the pre-test years and score the test window.

    ``methods`` is a sequence of ``(Transform, ZeroStrategy)`` pairs.
    """
    n_test = int(n_test)
    if n_test < 1 or len(panel.years) - n_test < MIN_YEARS:
        raise InsufficientYears(f"cannot hold out {n_test} of {len(panel.years)} years")
    train = panel.years[:-n_test]
    test = panel.years[-n_test:]

    def run(method):
        tf, zs = method
        cfg = PipelineConfig(tf, zs, global_factor=global_factor)
        rmse, mae = forecast_error(panel, train, test, cfg, on_counts)
        return EvalResult(method_label(tf, zs), tf, zs, rmse, mae, scaled=not on_counts)

    return _map(run, list(methods))


def parse_method(text):
    """Parse ``clr-omit``, ``ilr-replace:0.25``, ``alpha:0.5`` or ``rda``."""
    text = text.strip().lower()
    if text.startswith(("clr", "ilr")):
        kind, _, zs = text.partition("-")
        return Transform(kind), ZeroStrategy.parse(zs or "none")
    return Transform.parse(text), ZeroStrategy()


def comparison_methods(alphas=(0.5, 0.7, 0.9)):
    """Method list in the comparison-table layout: log-ratio baselines then alphas."""
    methods = []
    for kind in ("clr", "ilr"):
        methods.append((Transform(kind), ZeroStrategy("omit")))
        methods.append((Transform(kind), ZeroStrategy("replace", 0.25)))
        methods.append((Transform(kind), ZeroStrategy("replace", 0.5)))
    for a in sorted({float(a) for a in alphas if float(a) < 1.0}):
        methods.append((Transform("alpha", a), ZeroStrategy()))
    methods.append((Transform("rda"), ZeroStrategy()))
    return methods
