"""Bootstrap interval forecasts around the point forecast.

Each replicate resamples the time-factor innovations (whole years, so causes
keep their joint movement) and adds, for every part, a fitted residual drawn
from that part's own history. Replicates are mapped back to the simplex and
bands are per-cell empirical quantiles of the resulting densities.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .composition import closure
from .errors import ConfigError, EmptySamples, TooFewYears
from .parallel import thread_count
from .pipeline import fit_model, stage


@dataclass(frozen=True)
class IntervalConfig:
    n_boot: int = 1000
    coverage: float = 0.9
    seed: int = 0
    reclose: bool = False

    def __post_init__(self):
        if int(self.n_boot) < 100:
            raise ConfigError("n_boot must be at least 100")
        # coverage 0 collapses both bands onto the bootstrap median
        if not 0.0 <= float(self.coverage) < 1.0:
            raise ConfigError("coverage must lie in [0, 1)")
        if int(self.seed) < 0:
            raise ConfigError("seed must be non-negative")

    @property
    def levels(self):
        tail = (1.0 - self.coverage) / 2.0
        return tail, 1.0 - tail


@dataclass(frozen=True)
class IntervalForecast:
    years: tuple
    lower: np.ndarray
    point: np.ndarray
    upper: np.ndarray
    age_bands: tuple
    causes: tuple
    coverage: float
    n_boot: int
    order_violations: int = 0
    reclosed: bool = False


def empirical_quantile(samples, level, axis=None):
    """Linear-interpolation quantile, position ``(n - 1) * level`` (0-based).

    This is the usual "type 7" definition: the median of ``1, 2, 3, 4`` is
    2.5, level 0 is the minimum and level 1 the maximum.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0 or (axis is not None and samples.shape[axis] == 0):
        raise EmptySamples("no samples to take a quantile of")
    if not 0.0 <= level <= 1.0:
        raise ConfigError(f"quantile level must lie in [0, 1], got {level}")
    return np.quantile(samples, level, axis=axis, method="linear")


def _replicate_streams(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def bootstrap_samples(panel, cfg, icfg):
    """Fit once and simulate ``icfg.n_boot`` forecast paths.

    Returns ``(model, point, samples)`` where ``samples`` has shape
    ``(n_boot, horizon, P)`` in density space.
    """
    if len(panel.years) < 4:
        raise TooFewYears("bootstrap intervals need at least 4 years")
    model = fit_model(panel, cfg)
    h = cfg.horizon
    lc, dm = model.lc, model.drift
    innov = dm.innovations
    res = lc.residuals
    T, P = res.shape
    steps = np.arange(1, h + 1, dtype=float)[:, None]
    base_k = dm.last_value + steps * dm.drift
    cols = np.arange(P)

    def draw(rng):
        rows = rng.integers(0, innov.shape[0], size=h)
        k = base_k + np.cumsum(innov[rows], axis=0)
        eps = res[rng.integers(0, T, size=(h, P)), cols]
        return lc.reconstruct(k) + eps

    streams = _replicate_streams(int(icfg.seed), int(icfg.n_boot))
    n = thread_count()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as ex:
            wide = np.stack(list(ex.map(draw, streams)))
    else:
        wide = np.stack([draw(r) for r in streams])

    point, _ = model.back_transform(model.point_paths(h))
    samples, _ = model.back_transform(wide)
    return model, point, samples


def bootstrap_intervals(panel, cfg, icfg):
    """Per-cell bootstrap bands for the forecast densities."""
    model, point, samples = bootstrap_samples(panel, cfg, icfg)
    lo_level, hi_level = icfg.levels
    with stage("quantiles"):
        lower = empirical_quantile(samples, lo_level, axis=0)
        upper = empirical_quantile(samples, hi_level, axis=0)
    violations = int(np.sum((point < lower) | (point > upper)))
    if icfg.reclose:
        lower, upper = closure(lower), closure(upper)
    return IntervalForecast(
        model.forecast_years(cfg.horizon),
        lower,
        point,
        upper,
        panel.age_bands,
        panel.causes,
        float(icfg.coverage),
        int(icfg.n_boot),
        violations,
        bool(icfg.reclose),
    )
