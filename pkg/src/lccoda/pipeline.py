"""End-to-end point forecasts of death-density compositions.

The chain is: resolve zeros, build densities, centre on the column-wise
geometric mean, transform, fit the Lee-Carter structure, extrapolate the
time factors with a random walk with drift, invert the transform and
perturb back by the geometric mean.
"""

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .composition import (
    CompositionMatrix,
    center_rows,
    closure,
    compute_geometric_mean,
    perturb,
)
from .errors import CodaError, ConfigError, NonPositiveComponent, PipelineError
from .leecarter import fit, fit_drift, forecast_k, narrow_values
from .transforms import (
    Transform,
    ZeroStrategy,
    apply_zero_strategy,
    has_zeros,
    inverse,
    transform_matrix,
)


@contextmanager
def stage(name):
    """Re-raise package errors tagged with the pipeline stage that failed."""
    try:
        yield
    except PipelineError:
        raise
    except CodaError as exc:
        raise PipelineError(name, exc) from exc


@dataclass(frozen=True)
class PipelineConfig:
    transform: Transform
    zero_strategy: ZeroStrategy = field(default_factory=ZeroStrategy)
    horizon: int = 1
    global_factor: bool = False
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.transform, str):
            object.__setattr__(self, "transform", Transform.parse(self.transform))
        if isinstance(self.zero_strategy, str):
            object.__setattr__(self, "zero_strategy", ZeroStrategy.parse(self.zero_strategy))
        if int(self.horizon) < 1:
            raise ConfigError(f"horizon must be at least 1, got {self.horizon}")
        if int(self.seed) < 0:
            raise ConfigError("seed must be a non-negative integer")
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "seed", int(self.seed))

    def replace(self, **changes):
        values = {
            "transform": self.transform,
            "zero_strategy": self.zero_strategy,
            "horizon": self.horizon,
            "global_factor": self.global_factor,
            "seed": self.seed,
        }
        values.update(changes)
        return PipelineConfig(**values)

    def as_dict(self):
        return {
            "transform": self.transform.tag,
            "zero_strategy": self.zero_strategy.tag,
            "horizon": self.horizon,
            "global_factor": self.global_factor,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ForecastSet:
    """Forecast death densities, one full-width composition per year.

    Parts dropped by the omit strategy are forecast as zero density.
    ``clamp_events`` lists ``(year, age_band, cause)`` triples whose
    forecast hit the simplex boundary.
    """

    years: tuple
    densities: np.ndarray
    age_bands: tuple
    causes: tuple
    clamp_events: tuple = ()
    provenance: dict = field(default_factory=dict)

    def as_cube(self):
        return self.densities.reshape(len(self.years), len(self.age_bands), len(self.causes))


def positive_geometric_mean(values):
    """Geometric mean over the positive entries of every column.

    Columns with no positive entry take the smallest positive column mean,
    so that parts which never occur keep a small reference weight.
    """
    values = np.asarray(values, dtype=float)
    pos = values > 0
    logs = np.where(pos, np.log(np.where(pos, values, 1.0)), 0.0)
    counts = pos.sum(axis=0)
    g = np.exp(logs.sum(axis=0) / np.maximum(counts, 1))
    empty = counts == 0
    if empty.any():
        g[empty] = g[~empty].min()
    return g


@dataclass(frozen=True)
class FittedModel:
    """Everything a forecast needs from the training years."""

    config: PipelineConfig
    composition: object
    zero_report: object
    g: np.ndarray
    transformed: object
    lc: object
    drift: object
    full_parts: int

    @property
    def years(self):
        return self.composition.years

    def forecast_years(self, h):
        last = self.years[-1]
        return tuple(range(last + 1, last + 1 + h))

    def back_transform(self, wide):
        """Map ``P``-wide transformed rows to full-width densities.

        Returns ``(densities, clamped)``; the last axis of both is the full
        part count.
        """
        tf = self.config.transform
        m = self.composition
        narrow = narrow_values(wide, tf, m.n_parts)
        with stage("inverse-transform"):
            centred, clamped = inverse(narrow, tf)
        with stage("perturb"):
            dens = perturb(centred, self.g)
        idx = kept_columns(m)
        full = np.zeros(dens.shape[:-1] + (self.full_parts,))
        full[..., idx] = dens
        full_clamped = np.zeros(full.shape, dtype=bool)
        full_clamped[..., idx] = clamped
        return full, full_clamped

    def point_paths(self, h):
        """Wide-space point forecasts ``b * k_hat`` for ``h`` years."""
        return self.lc.reconstruct(forecast_k(self.drift, h))

    def fitted_densities(self):
        """In-sample densities implied by ``b * k`` without residuals."""
        return self.back_transform(self.lc.reconstruct())[0]


def kept_columns(m):
    C = len(m.causes)
    return np.array([u * C + c for u, c in m.parts], dtype=int)


@dataclass(frozen=True)
class Reference:
    """Kept parts and geometric-mean reference shared by several fits."""

    parts: tuple
    g: np.ndarray


def _reference_g(m):
    return compute_geometric_mean(m) if not has_zeros(m) else positive_geometric_mean(m.values)


def centring_reference(panel, cfg):
    """Resolve zeros on ``panel`` and return its :class:`Reference`.

    Cross-validation uses this to centre every fold on the same geometric
    mean, taken over the whole tuning window.
    """
    with stage("zero-strategy"):
        m, _ = apply_zero_strategy(panel, cfg.zero_strategy)
    if cfg.transform.log_ratio and has_zeros(m):
        raise PipelineError("transform", NonPositiveComponent("zero densities in reference window"))
    with stage("geometric-mean"):
        return Reference(m.parts, _reference_g(m))


def _restrict(m, parts):
    if m.parts == tuple(parts):
        return m
    index = {part: i for i, part in enumerate(m.parts)}
    try:
        cols = [index[part] for part in parts]
    except KeyError as exc:
        raise ConfigError(f"reference part {exc.args[0]} missing from panel") from None
    return CompositionMatrix(
        closure(m.values[:, cols]), m.years, m.age_bands, m.causes, tuple(parts)
    )


def fit_model(panel, cfg, reference=None):
    """Run every training stage and return a :class:`FittedModel`.

    With a ``reference`` the kept parts and the geometric mean come from it
    instead of from ``panel``.
    """
    tf = cfg.transform
    with stage("zero-strategy"):
        if reference is not None and cfg.zero_strategy.kind == "omit":
            m, report = apply_zero_strategy(panel, ZeroStrategy())
            m = _restrict(m, reference.parts)
        else:
            m, report = apply_zero_strategy(panel, cfg.zero_strategy)
    if tf.log_ratio and has_zeros(m):
        raise PipelineError(
            "transform",
            NonPositiveComponent(
                f"{tf.tag} cannot handle zero densities under zero strategy "
                f"{cfg.zero_strategy.tag!r}; use omit/replace or an alpha transform"
            ),
        )
    with stage("geometric-mean"):
        g = _reference_g(m) if reference is None else np.asarray(reference.g, dtype=float)
    with stage("centre"):
        centred = center_rows(m, g)
    with stage("transform"):
        tm = transform_matrix(centred, tf)
    with stage("fit"):
        lc = fit(tm, g=g, global_factor=cfg.global_factor)
    with stage("drift"):
        dm = fit_drift(lc)
    return FittedModel(
        cfg, m, report, g, tm, lc, dm, len(panel.age_bands) * len(panel.causes)
    )


def clamp_events(years, clamped, age_bands, causes):
    C = len(causes)
    events = []
    for i, p in zip(*np.nonzero(clamped)):
        u, c = divmod(int(p), C)
        events.append((years[i], age_bands[u], causes[c]))
    return tuple(events)


def run_point_forecast(panel, cfg, horizon=None, reference=None):
    """Forecast death densities for ``cfg.horizon`` years after the panel."""
    h = cfg.horizon if horizon is None else int(horizon)
    model = fit_model(panel, cfg, reference)
    with stage("forecast"):
        wide = model.point_paths(h)
    dens, clamped = model.back_transform(wide)
    years = model.forecast_years(h)
    provenance = {
        "version": __version__,
        "config": cfg.as_dict(),
        "normalization": dict(model.lc.normalization),
        "degenerate_causes": [panel.causes[c] for c in model.lc.degenerate],
        "dropped_parts": [list(lbl) for lbl in model.zero_report.dropped_labels],
        "training_years": [panel.years[0], panel.years[-1]],
    }
    return ForecastSet(
        years,
        dens,
        panel.age_bands,
        panel.causes,
        clamp_events(years, clamped, panel.age_bands, panel.causes),
        provenance,
    )


def reconstruct_counts(fs, total_deaths):
    """Scale forecast densities by externally supplied yearly death totals.

    Totals are not forecast here; pass a scalar or one value per forecast
    year.
    """
    totals = np.broadcast_to(np.asarray(total_deaths, dtype=float), (len(fs.years),))
    if np.any(totals <= 0):
        raise ConfigError("total deaths must be positive")
    return fs.densities * totals[:, None]
