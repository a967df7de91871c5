"""Classifiers with an abstain option.

A 1-D classifier is a sorted list of decision boundaries ``y`` plus, for each
boundary, a left and right abstain half-width.  Regions alternate starting
with ``R0`` on the far left; ``R0`` pieces are open, ``R1`` pieces and abstain
intervals are closed.  The d-dimensional form uses three sign functions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import ValidationError


class Label(enum.IntEnum):
    H0 = 0
    H1 = 1
    ABSTAIN = 2

    def __str__(self) -> str:
        return {0: "H0", 1: "H1", 2: "abstain"}[int(self)]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        left = x >= self.lo if self.lo_closed else x > self.lo
        right = x <= self.hi if self.hi_closed else x < self.hi
        return left & right

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class IntervalSet:
    intervals: tuple[Interval, ...]

    def __post_init__(self):
        ivs = tuple(self.intervals)
        for a, b in zip(ivs[:-1], ivs[1:]):
            touching = a.hi == b.lo and not (a.hi_closed and b.lo_closed)
            if not (a.hi < b.lo or touching):
                raise ValidationError(f"intervals {a} and {b} overlap or are unsorted")
        object.__setattr__(self, "intervals", ivs)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for iv in self.intervals:
            out |= iv.contains(x)
        return out

    def measure(self) -> float:
        return float(sum(iv.length for iv in self.intervals))

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)


@dataclass(frozen=True)
class Classifier1D:
    """Decision boundaries ``y`` and abstain half-widths ``gamma``.

    ``gamma`` is laid out as ``[g11, g12, g21, g22, ...]``: ``gi1`` extends the
    abstain interval to the left of ``y[i]``, ``gi2`` to the right.  The two
    outermost half-widths may be infinite.
    """

    y: tuple[float, ...]
    gamma: tuple[float, ...] | None = None

    def __post_init__(self):
        y = tuple(float(v) for v in np.atleast_1d(np.asarray(self.y, dtype=float)))
        n = len(y)
        if n < 1:
            raise ValidationError("need at least one decision boundary")
        if not all(math.isfinite(v) for v in y):
            raise ValidationError("decision boundaries must be finite")
        if any(b <= a for a, b in zip(y[:-1], y[1:])):
            raise ValidationError("decision boundaries must be strictly increasing")
        gamma = (0.0,) * (2 * n) if self.gamma is None else tuple(float(g) for g in self.gamma)
        if len(gamma) != 2 * n:
            raise ValidationError(f"expected {2 * n} abstain half-widths, got {len(gamma)}")
        for k, g in enumerate(gamma):
            if math.isnan(g) or g < 0:
                raise ValidationError(f"abstain half-width {k} must be >= 0, got {g}")
            if math.isinf(g) and k not in (0, 2 * n - 1):
                raise ValidationError("only the outermost half-widths may be infinite")
        for i in range(n - 1):
            if not y[i] + gamma[2 * i + 1] < y[i + 1] - gamma[2 * i + 2]:
                raise ValidationError(
                    f"abstain intervals around y[{i}] and y[{i + 1}] overlap"
                )
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def gamma_array(self) -> np.ndarray:
        return np.asarray(self.gamma, dtype=float)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Left and right abstain edges ``(y_i - g_i1, y_i + g_i2)``."""
        y = np.asarray(self.y)
        g = self.gamma_array.reshape(-1, 2)
        return y - g[:, 0], y + g[:, 1]

    def with_gamma(self, gamma: Sequence[float]) -> "Classifier1D":
        return Classifier1D(self.y, tuple(gamma))

    def classify(self, x):
        return classify(self, x)


def regions(c: Classifier1D) -> tuple[IntervalSet, IntervalSet, IntervalSet]:
    """Return ``(R0, R1, Ra)`` as interval sets."""
    bounds = [-math.inf, *c.y, math.inf]
    r0, r1 = [], []
    for i in range(len(bounds) - 1):
        lo, hi = bounds[i], bounds[i + 1]
        if i % 2 == 0:
            r0.append(Interval(lo, hi, False, False))
        else:
            r1.append(Interval(lo, hi, True, math.isfinite(hi)))
    left, right = c.edges()
    ra = [Interval(float(a), float(b), math.isfinite(a), math.isfinite(b))
          for a, b in zip(left, right)]
    return IntervalSet(tuple(r0)), IntervalSet(tuple(r1)), IntervalSet(tuple(ra))


def in_r1(c: Classifier1D, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(c.y)
    k = np.searchsorted(y, x, side="right")  # number of boundaries <= x
    # k odd: x in [y_k, y_{k+1}); k even >= 2 and x == y_k: right end of a closed R1 piece
    on_right_end = (k % 2 == 0) & (k >= 2) & (x == y[np.maximum(k - 1, 0)])
    return (k % 2 == 1) | on_right_end


def in_abstain(c: Classifier1D, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    left, right = c.edges()
    out = np.zeros(x.shape, dtype=bool)
    for a, b in zip(left, right):
        out |= (x >= a) & (x <= b)
    return out


def classify(c: Classifier1D, x):
    """Label ``x`` (scalar or array). Abstain wins, then R0 vs R1."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValidationError("classify needs finite inputs")
    labels = np.where(in_abstain(c, x), Label.ABSTAIN, np.where(in_r1(c, x), Label.H1, Label.H0))
    if labels.ndim == 0:
        return Label(int(labels))
    return labels.astype(np.int8)


SignFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RegionSpecD:
    """d-dimensional classifier given by sign functions.

    ``g(x) <= 0`` is R0, ``g(x) > 0`` is R1, and the abstain region is
    ``g1(x) >= 0 and g2(x) <= 0``.  Each function maps an ``(N, d)`` array to
    an ``(N,)`` array.
    """

    dimension: int
    g: SignFn
    g1: SignFn
    g2: SignFn

    def __post_init__(self):
        if int(self.dimension) < 1:
            raise ValidationError("dimension must be >= 1")
        object.__setattr__(self, "dimension", int(self.dimension))

    @classmethod
    def from_classifier(cls, c: Classifier1D) -> "RegionSpecD":
        """Wrap a 1-D classifier; inputs are ``(N, 1)`` arrays."""
        return cls(
            1,
            g=lambda X: np.where(in_r1(c, X[:, 0]), 1.0, -1.0),
            g1=lambda X: np.where(in_abstain(c, X[:, 0]), 1.0, -1.0),
            g2=lambda X: np.full(X.shape[0], -1.0),
        )

    @classmethod
    def slab(cls, dimension: int, half_width: float, axis: int = 0) -> "RegionSpecD":
        """Boundary ``x[axis] = 0`` with abstain slab ``|x[axis]| <= half_width``."""
        return cls(
            dimension,
            g=lambda X: X[:, axis],
            g1=lambda X: X[:, axis] + half_width,
            g2=lambda X: X[:, axis] - half_width,
        )


def classify_points(r: RegionSpecD, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != r.dimension:
        raise ValidationError(f"expected {r.dimension}-dimensional points, got {X.shape[1]}")
    abstain = (np.asarray(r.g1(X)) >= 0) & (np.asarray(r.g2(X)) <= 0)
    r1 = np.asarray(r.g(X)) > 0
    return np.where(abstain, Label.ABSTAIN, np.where(r1, Label.H1, Label.H0)).astype(np.int8)


def classify_d(r: RegionSpecD, x) -> Label:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return Label(int(classify_points(r, x)[0]))
