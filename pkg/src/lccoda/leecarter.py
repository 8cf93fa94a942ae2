"""Lee-Carter factor fits and random-walk-with-drift forecasts.

The compositional model has no intercept: centred, transformed densities
are approximated per cause by a rank-1 product ``b[u, c] * k[t, c]``.
Loadings are scaled to unit Euclidean norm per cause with a non-negative
sum; the time factor absorbs the singular value.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveRate, NumericError, TooFewYears
from .transforms import helmert

MIN_YEARS = 3


def rank1(block):
    """Best rank-1 approximation ``outer(k, b)`` of a ``T x U`` block.

    Returns ``(b, k)`` with ``||b|| = 1`` and ``sum(b) >= 0``. An all-zero
    block gives uniform ``b`` and ``k = 0``.
    """
    block = np.asarray(block, dtype=float)
    T, U = block.shape
    if not np.any(block):
        return np.full(U, 1.0 / np.sqrt(U)), np.zeros(T)
    u, s, vt = np.linalg.svd(block, full_matrices=False)
    b = vt[0]
    k = u[:, 0] * s[0]
    if b.sum() < 0:
        b, k = -b, -k
    return b, k


@dataclass(frozen=True)
class LeeCarterFit:
    """Fitted loadings, time factors and residuals in ``P``-wide space.

    ``b`` has one loading per part, ``k`` is ``T x C`` and ``residuals``
    is ``T x P`` such that ``k[:, cause(p)] * b[p] + residuals[:, p]``
    reproduces the fitted matrix.
    """

    b: np.ndarray
    k: np.ndarray
    residuals: np.ndarray
    transform: object
    parts: tuple
    n_causes: int
    years: tuple = ()
    g: np.ndarray = None
    normalization: dict = field(default_factory=dict)
    degenerate: tuple = ()

    @property
    def part_causes(self):
        return np.array([c for _, c in self.parts], dtype=int)

    def reconstruct(self, k=None):
        """``k[:, cause(p)] * b[p]`` for the fitted or a forecast ``k``."""
        k = self.k if k is None else np.asarray(k, dtype=float)
        return k[..., self.part_causes] * self.b

    @property
    def fitted(self):
        return self.reconstruct() + self.residuals


def wide_values(tm):
    """Transformed rows in ``P``-wide coordinates.

    Coordinates with ``P-1`` columns are mapped back through the Helmert
    transpose so each column belongs to one (age, cause) part.
    """
    values = np.asarray(tm.values, dtype=float)
    P = len(tm.parts)
    if values.shape[1] == P - 1:
        return values @ helmert(P)
    return values


def narrow_values(wide, transform, n_parts):
    """Inverse of :func:`wide_values` for transforms living in ``P-1`` dimensions."""
    if transform.kind == "clr":
        return wide
    return wide @ helmert(n_parts).T


def fit(tm, g=None, global_factor=False):
    """Fit the intercept-free Lee-Carter structure to a transformed matrix.

    Parameters
    ----------
    tm : TransformedMatrix
        Centred, transformed training rows.
    g : array_like, optional
        Geometric-mean reference kept with the fit for back-transforming.
    global_factor : bool
        Use one SVD across all parts instead of one per cause.
    """
    W = wide_values(tm)
    T, P = W.shape
    if T < MIN_YEARS:
        raise TooFewYears(f"need at least {MIN_YEARS} years to fit, got {T}")
    if not np.all(np.isfinite(W)):
        raise NumericError("transformed matrix contains non-finite values")
    C = len(tm.causes)
    causes = tm.part_causes
    b = np.zeros(P)
    k = np.zeros((T, C))
    degenerate = []

    if global_factor:
        b, kt = rank1(W)
        k[:] = kt[:, None]
        if not np.any(W):
            degenerate = list(range(C))
    else:
        for c in range(C):
            cols = np.flatnonzero(causes == c)
            if cols.size == 0:
                continue
            block = W[:, cols]
            if not np.any(block):
                degenerate.append(c)
            b[cols], k[:, c] = rank1(block)

    residuals = W - k[:, causes] * b
    normalization = {
        "loadings": "unit_l2_per_cause" if not global_factor else "unit_l2_global",
        "sign": "loading_sum_nonnegative",
        "factor": "global" if global_factor else "per_cause",
    }
    return LeeCarterFit(
        b=b,
        k=k,
        residuals=residuals,
        transform=tm.transform,
        parts=tuple(tm.parts),
        n_causes=C,
        years=tuple(tm.years),
        g=None if g is None else np.asarray(g, dtype=float),
        normalization=normalization,
        degenerate=tuple(degenerate),
    )


@dataclass(frozen=True)
class DriftModel:
    """Random walk with drift for every cause's time factor."""

    drift: np.ndarray
    innovation_sd: np.ndarray
    last_value: np.ndarray
    innovations: np.ndarray


def fit_drift(k):
    """Estimate drift and innovation spread from ``T x C`` time factors.

    Accepts a :class:`LeeCarterFit` or the factor matrix directly. The drift
    is ``(k[T] - k[1]) / (T - 1)``; the innovation standard deviation uses
    divisor ``T - 2``.
    """
    if isinstance(k, LeeCarterFit):
        k = k.k
    k = np.asarray(k, dtype=float)
    if k.ndim == 1:
        k = k[:, None]
    T = k.shape[0]
    if T < MIN_YEARS:
        raise TooFewYears(f"need at least {MIN_YEARS} years for a drift model, got {T}")
    diffs = np.diff(k, axis=0)
    drift = (k[-1] - k[0]) / (T - 1)
    innovations = diffs - drift
    sd = np.sqrt((innovations**2).sum(axis=0) / (T - 2))
    return DriftModel(drift, sd, k[-1].copy(), innovations)


def forecast_k(dm, h):
    """Point forecasts ``last + j * drift`` for ``j = 1..h``, shape ``(h, C)``."""
    steps = np.arange(1, int(h) + 1, dtype=float)[:, None]
    return dm.last_value + steps * dm.drift


@dataclass(frozen=True)
class ClassicalLCFit:
    """Lee-Carter fit on log central death rates (with intercept).

    ``mu`` and ``b`` are ``U x C``, ``k`` is ``T x C`` and ``residuals`` is
    ``T x U x C``.
    """

    mu: np.ndarray
    b: np.ndarray
    k: np.ndarray
    residuals: np.ndarray

    def log_rates(self, k=None):
        k = self.k if k is None else np.asarray(k, dtype=float)
        return self.mu + k[:, None, :] * self.b

    def forecast(self, h):
        """Forecast central death rates ``h`` years ahead, shape ``(h, U, C)``."""
        return np.exp(self.log_rates(forecast_k(fit_drift(self.k), h)))


def central_death_rates(deaths, exposures):
    """``deaths / exposures`` with validation on the exposures."""
    deaths = np.asarray(deaths, dtype=float)
    exposures = np.asarray(exposures, dtype=float)
    if np.any(exposures <= 0):
        raise NonPositiveRate("exposures must be strictly positive")
    return deaths / exposures


def fit_classical_lc(rates):
    """Fit ``ln m[t,u,c] = mu[u,c] + b[u,c] k[t,c] + eps`` cause by cause.

    ``rates`` is ``T x U x C`` (or ``T x U`` for a single cause).
    """
    rates = np.asarray(rates, dtype=float)
    if rates.ndim == 2:
        rates = rates[:, :, None]
    if np.any(~(rates > 0)):
        raise NonPositiveRate("log mortality needs strictly positive rates")
    T, U, C = rates.shape
    if T < MIN_YEARS:
        raise TooFewYears(f"need at least {MIN_YEARS} years to fit, got {T}")
    logm = np.log(rates)
    mu = logm.mean(axis=0)
    centred = logm - mu
    b = np.zeros((U, C))
    k = np.zeros((T, C))
    for c in range(C):
        b[:, c], k[:, c] = rank1(centred[:, :, c])
    residuals = centred - k[:, None, :] * b
    return ClassicalLCFit(mu, b, k, residuals)
