"""Log-ratio and power transformations between the simplex and real space.

All row-wise functions accept a single composition or a stack of them and
operate along the last axis.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .composition import CompositionMatrix, build_composition, closure
from .errors import (
    AllComponentsClamped,
    AllPartsDropped,
    AllZeroRow,
    AlphaOutOfRange,
    ConfigError,
    NegativeEntry,
    NonPositiveComponent,
    PartCountTooSmall,
)

# |v| below this is treated as landing exactly on the simplex boundary
BOUNDARY_SNAP = 1e-12


@dataclass(frozen=True)
class Transform:
    """Which map takes centred compositions to real space.

    ``kind`` is one of ``clr``, ``ilr``, ``alpha`` or ``rda``; ``alpha`` is
    only meaningful for the power transform (``rda`` is the power transform
    at 1).
    """

    kind: str
    alpha: float = None

    def __post_init__(self):
        if self.kind not in ("clr", "ilr", "alpha", "rda"):
            raise ConfigError(f"unknown transform {self.kind!r}")
        if self.kind == "alpha":
            if self.alpha is None:
                raise AlphaOutOfRange("alpha transform needs a value for alpha")
            object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        elif self.kind == "rda":
            object.__setattr__(self, "alpha", 1.0)
        else:
            object.__setattr__(self, "alpha", None)

    @classmethod
    def parse(cls, text, alpha=None):
        """Build from ``clr``, ``ilr``, ``rda``, ``alpha`` or ``alpha:<value>``."""
        text = text.strip().lower()
        if text.startswith("alpha:"):
            return cls("alpha", float(text.split(":", 1)[1]))
        if text == "alpha":
            return cls("alpha", alpha)
        return cls(text)

    @property
    def tag(self):
        if self.kind == "alpha":
            return f"alpha:{self.alpha:g}"
        return self.kind

    @property
    def log_ratio(self):
        return self.kind in ("clr", "ilr")

    def __str__(self):
        return self.tag


@dataclass(frozen=True)
class ZeroStrategy:
    """How zero death counts are resolved before transforming.

    ``kind`` is ``none``, ``omit`` (drop every part with a zero in any year)
    or ``replace`` (add ``amount`` deaths to every zero cell).
    """

    kind: str = "none"
    amount: float = None

    def __post_init__(self):
        if self.kind not in ("none", "omit", "replace"):
            raise ConfigError(f"unknown zero strategy {self.kind!r}")
        if self.kind == "replace":
            if self.amount is None or not self.amount > 0:
                raise ConfigError("replacement amount must be positive")
            object.__setattr__(self, "amount", float(self.amount))
        else:
            object.__setattr__(self, "amount", None)

    @classmethod
    def parse(cls, text):
        text = text.strip().lower()
        if text.startswith("replace:"):
            return cls("replace", float(text.split(":", 1)[1]))
        return cls(text)

    @property
    def tag(self):
        return f"replace:{self.amount:g}" if self.kind == "replace" else self.kind

    def __str__(self):
        return self.tag


@dataclass(frozen=True)
class ZeroReport:
    strategy: ZeroStrategy
    zero_cells: int
    dropped_parts: tuple = ()
    dropped_labels: tuple = ()


@dataclass(frozen=True)
class TransformedMatrix:
    """Transformed rows plus the metadata needed to map them back.

    ``values`` is ``T x P`` for CLR and ``T x (P-1)`` otherwise.
    """

    values: np.ndarray
    transform: Transform
    years: tuple
    age_bands: tuple
    causes: tuple
    parts: tuple = field(default=None)

    @property
    def n_parts(self):
        return len(self.parts)

    @property
    def part_causes(self):
        return np.array([c for _, c in self.parts], dtype=int)


def _check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1], got {alpha}")
    return alpha


@lru_cache(maxsize=256)
def _helmert(p):
    j = np.arange(1, p, dtype=float)[:, None]
    cols = np.arange(1, p + 1, dtype=float)[None, :]
    norm = np.sqrt(j * (j + 1))
    h = np.where(cols <= j, 1.0 / norm, 0.0)
    h = np.where(cols == j + 1, -j / norm, h)
    h.setflags(write=False)
    return h


def helmert(p):
    """Helmert matrix with its first row removed, shape ``(p-1, p)``.

    Row ``j`` holds ``1/sqrt(j(j+1))`` in its first ``j`` places and
    ``-j/sqrt(j(j+1))`` in place ``j+1``. Rows are orthonormal and
    orthogonal to the constant vector. Results are cached and read-only.
    """
    p = int(p)
    if p < 2:
        raise PartCountTooSmall(f"need at least 2 parts, got {p}")
    return _helmert(p)


def clr(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise NonPositiveComponent(
            "clr needs strictly positive parts; apply a zero strategy or use alpha > 0"
        )
    lx = np.log(x)
    return lx - lx.mean(axis=-1, keepdims=True)


def clr_inverse(w):
    w = np.asarray(w, dtype=float)
    return closure(np.exp(w - w.max(axis=-1, keepdims=True)))


def ilr(x):
    x = np.asarray(x, dtype=float)
    return clr(x) @ helmert(x.shape[-1]).T


def ilr_inverse(z):
    z = np.asarray(z, dtype=float)
    return clr_inverse(z @ helmert(z.shape[-1] + 1))


def alpha_centered(x, alpha):
    """Zero-sum power-transformed coordinates ``(P x^a / sum x^a - 1) / a``.

    Each component lies in ``[-1/alpha, (P-1)/alpha]``; a zero part maps to
    exactly ``-1/alpha``.
    """
    alpha = _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise NegativeEntry("compositions must be non-negative")
    xa = x**alpha
    s = xa.sum(axis=-1, keepdims=True)
    if np.any(s <= 0):
        raise AllZeroRow("cannot transform a row with no positive part")
    P = x.shape[-1]
    return (P * xa / s - 1.0) / alpha


def alpha_forward(x, alpha):
    x = np.asarray(x, dtype=float)
    return alpha_centered(x, alpha) @ helmert(x.shape[-1]).T


def alpha_inverse(z, alpha):
    """Map coordinates back to the simplex.

    Returns ``(composition, clamped)`` where ``clamped`` flags parts whose
    pre-image fell below ``-1/alpha`` and were pinned to zero density.
    """
    alpha = _check_alpha(alpha)
    z = np.asarray(z, dtype=float)
    v = alpha * (z @ helmert(z.shape[-1] + 1)) + 1.0
    clamped = v < -BOUNDARY_SNAP
    v = np.where(v <= BOUNDARY_SNAP, 0.0, v)
    if np.any(np.all(v == 0, axis=-1)):
        raise AllComponentsClamped("every part fell outside the alpha-space")
    return closure(v ** (1.0 / alpha)), clamped


def rda_forward(x):
    return alpha_forward(x, 1.0)


def rda_inverse(z):
    return alpha_inverse(z, 1.0)


def forward(x, transform):
    """Apply ``transform`` row-wise to compositions ``x``."""
    if transform.kind == "clr":
        return clr(x)
    if transform.kind == "ilr":
        return ilr(x)
    return alpha_forward(x, transform.alpha)


def inverse(values, transform):
    """Inverse of :func:`forward`; returns ``(compositions, clamped)``."""
    values = np.asarray(values, dtype=float)
    if transform.kind == "clr":
        comp = clr_inverse(values)
    elif transform.kind == "ilr":
        comp = ilr_inverse(values)
    else:
        return alpha_inverse(values, transform.alpha)
    return comp, np.zeros(comp.shape, dtype=bool)


def transform_matrix(m, transform):
    """Transform every row of a :class:`CompositionMatrix`."""
    return TransformedMatrix(
        forward(m.values, transform), transform, m.years, m.age_bands, m.causes, m.parts
    )


def apply_zero_strategy(panel, strategy):
    """Resolve zero counts and build the composition matrix.

    Returns the matrix together with a :class:`ZeroReport`.
    """
    zero_mask = panel.counts == 0
    n_zero = int(zero_mask.sum())
    if strategy.kind == "replace" and n_zero:
        panel = panel.with_counts(np.where(zero_mask, strategy.amount, panel.counts))
    m = build_composition(panel)
    if strategy.kind != "omit":
        return m, ZeroReport(strategy, n_zero)

    has_zero = np.any(m.values == 0, axis=0)
    if has_zero.all():
        raise AllPartsDropped("every part contains a zero; nothing left to model")
    keep = np.flatnonzero(~has_zero)
    dropped = tuple(int(p) for p in np.flatnonzero(has_zero))
    labels = tuple(m.part_labels[p] for p in dropped)
    out = CompositionMatrix(
        closure(m.values[:, keep]),
        m.years,
        m.age_bands,
        m.causes,
        tuple(m.parts[p] for p in keep),
    )
    return out, ZeroReport(strategy, n_zero, dropped, labels)


def has_zeros(m):
    values = m.values if isinstance(m, CompositionMatrix) else np.asarray(m)
    return bool(np.any(values == 0))
