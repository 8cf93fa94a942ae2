"""Compositional data model and simplex algebra.

Death counts indexed by (year, age band, cause) are turned into a matrix of
death densities whose rows live on the simplex. Parts are ordered with the
cause index running faster than the age index, so part ``p`` corresponds to
``(u, c) = divmod(p, n_causes)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllZeroVector,
    LengthMismatch,
    MissingCell,
    NegativeDeaths,
    NegativeEntry,
    NonPositivePerturbation,
    ParseError,
    YearWithZeroTotal,
    ZeroInColumn,
)

ROW_SUM_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def part_index(u, c, n_causes):
    """Column index of age band ``u`` and cause ``c`` (0-based)."""
    return u * n_causes + c


def part_coords(p, n_causes):
    """Inverse of :func:`part_index`."""
    return divmod(p, n_causes)


@dataclass(frozen=True)
class DeathCountPanel:
    """Dense panel of death counts for one population and sex.

    ``counts`` has shape ``(T, U, C)``. Counts are stored as floats since
    zero replacement injects fractional deaths.
    """

    years: tuple
    age_bands: tuple
    causes: tuple
    counts: np.ndarray
    sex: str = "total"

    def __post_init__(self):
        object.__setattr__(self, "years", tuple(int(y) for y in self.years))
        object.__setattr__(self, "age_bands", tuple(self.age_bands))
        object.__setattr__(self, "causes", tuple(self.causes))
        counts = _frozen(self.counts)
        object.__setattr__(self, "counts", counts)
        shape = (len(self.years), len(self.age_bands), len(self.causes))
        if counts.shape != shape:
            raise MissingCell(f"counts shape {counts.shape} does not match labels {shape}")
        if not np.all(np.isfinite(counts)):
            raise MissingCell("counts contain non-finite cells")
        if np.any(counts < 0):
            raise NegativeDeaths("death counts must be non-negative")
        if any(b - a != 1 for a, b in zip(self.years, self.years[1:])):
            raise ParseError(f"years must be consecutive, got {self.years}")

    @property
    def shape(self):
        return self.counts.shape

    @property
    def totals(self):
        return self.counts.sum(axis=(1, 2))

    def select_years(self, years):
        """Sub-panel restricted to ``years`` (a consecutive run)."""
        idx = [self.years.index(y) for y in years]
        return DeathCountPanel(
            tuple(years), self.age_bands, self.causes, self.counts[idx], self.sex
        )

    def with_counts(self, counts):
        return DeathCountPanel(self.years, self.age_bands, self.causes, counts, self.sex)


@dataclass(frozen=True)
class CompositionMatrix:
    """``T x P`` matrix of death densities with part metadata.

    ``parts`` lists the ``(u, c)`` index pair behind each column. It is the
    full cause-fastest ordering unless parts were dropped by a zero strategy.
    """

    values: np.ndarray
    years: tuple
    age_bands: tuple
    causes: tuple
    parts: tuple = field(default=None)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise LengthMismatch("composition matrix must be two-dimensional")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "years", tuple(self.years))
        object.__setattr__(self, "age_bands", tuple(self.age_bands))
        object.__setattr__(self, "causes", tuple(self.causes))
        if self.parts is None:
            C = len(self.causes)
            parts = tuple(part_coords(p, C) for p in range(len(self.age_bands) * C))
        else:
            parts = tuple((int(u), int(c)) for u, c in self.parts)
        object.__setattr__(self, "parts", parts)
        if values.shape != (len(self.years), len(parts)):
            raise LengthMismatch(
                f"values shape {values.shape} does not match "
                f"{len(self.years)} years x {len(parts)} parts"
            )
        if np.any(values < 0):
            raise NegativeEntry("densities must be non-negative")
        sums = values.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            raise AllZeroVector(f"rows must sum to 1, worst deviation {np.max(np.abs(sums - 1))}")

    @property
    def n_parts(self):
        return len(self.parts)

    @property
    def part_causes(self):
        """Cause index of every column."""
        return np.array([c for _, c in self.parts], dtype=int)

    @property
    def part_labels(self):
        return [(self.age_bands[u], self.causes[c]) for u, c in self.parts]

    def replace_values(self, values):
        return CompositionMatrix(values, self.years, self.age_bands, self.causes, self.parts)


def closure(v):
    """Normalise a non-negative vector (or each row of a matrix) to sum 1.

    Rows already summing to 1 within rounding are returned unchanged, which
    makes ``closure`` exactly idempotent.
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise NegativeEntry("closure requires non-negative entries")
    s = v.sum(axis=-1, keepdims=True)
    if np.any(s <= 0):
        raise AllZeroVector("cannot close a vector whose entries are all zero")
    closed = np.abs(s - 1.0) <= 4 * v.shape[-1] * np.finfo(float).eps
    return np.where(closed, v, v / s)


def _check_pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise LengthMismatch(f"length {x.shape[-1]} != {y.shape[-1]}")
    if np.any(y <= 0):
        raise NonPositivePerturbation("perturbing composition must be strictly positive")
    return x, y


def perturb(x, y):
    """Simplex perturbation: closure of the element-wise product."""
    x, y = _check_pair(x, y)
    return closure(x * y)


def inverse_perturb(x, y):
    """Inverse perturbation: closure of the element-wise ratio ``x / y``.

    Zero parts of ``x`` stay zero.
    """
    x, y = _check_pair(x, y)
    return closure(x / y)


def build_composition(panel):
    """Death densities ``D[t,u,c] / D[t]`` flattened with cause running fastest."""
    totals = panel.totals
    bad = [y for y, s in zip(panel.years, totals) if s <= 0]
    if bad:
        raise YearWithZeroTotal(f"years with no deaths: {bad}")
    T = len(panel.years)
    values = panel.counts.reshape(T, -1) / totals[:, None]
    return CompositionMatrix(values, panel.years, panel.age_bands, panel.causes)


def compute_geometric_mean(m):
    """Column-wise geometric mean, computed as ``exp(mean(log))``."""
    values = m.values if isinstance(m, CompositionMatrix) else np.asarray(m, dtype=float)
    zero_cols = np.flatnonzero(np.any(values <= 0, axis=0))
    if zero_cols.size:
        raise ZeroInColumn(f"zero densities in columns {zero_cols.tolist()}")
    return np.exp(np.log(values).mean(axis=0))


def center_rows(m, g):
    """Centre every row by inverse perturbation with ``g``."""
    return m.replace_values(inverse_perturb(m.values, g))
