"""One-dimensional densities with exact CDFs, quantiles and seeded samplers.

Every family exposes vectorised ``pdf``, ``cdf`` and ``quantile`` methods.
CDFs are closed form for every family, including mixtures (weighted sum of
component CDFs) and tabulated densities (exact integral of the piecewise
linear interpolant).  :func:`integrate_pdf` is an independent adaptive
quadrature path used to validate them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .exceptions import NumericalError, ValidationError

QUAD_ABS_TOL = 1e-10
QUAD_LIMIT = 10_000
TAIL_MASS = 1e-15


def _as_array(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.isnan(arr).any():
        raise ValidationError("density evaluated at NaN")
    return arr


def _finite_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a finite positive number, got {value!r}")
    return value


class Density1D:
    """Base class. Subclasses are frozen dataclasses."""

    family: str = ""

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, q):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def breakpoints(self) -> list[float]:
        """Points where quadrature should split (kinks, modes, edges)."""
        return []

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def effective_support(self, tail: float = TAIL_MASS) -> tuple[float, float]:
        """Interval outside of which at most ``tail`` mass lies on each side."""
        lo, hi = self.support()
        if not math.isfinite(lo):
            lo = float(self.quantile(tail))
        if not math.isfinite(hi):
            hi = float(self.quantile(1.0 - tail))
        return lo, hi

    def sample(self, n: int, seed: int | np.random.Generator) -> np.ndarray:
        return sample(self, n, seed)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(Density1D):
    rate: float
    family = "exponential"

    def __post_init__(self):
        object.__setattr__(self, "rate", _finite_positive("rate", self.rate))

    def pdf(self, x):
        x = _as_array(x)
        # closed support: pdf(0) = rate
        with np.errstate(over="ignore"):
            return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def cdf(self, x):
        x = _as_array(x)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def sf(self, x):
        x = _as_array(x)
        return np.where(x > 0, np.exp(-self.rate * np.maximum(x, 0.0)), 1.0)

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        return -np.log1p(-q) / self.rate

    def support(self):
        return 0.0, math.inf

    def breakpoints(self):
        return [0.0, 1.0 / self.rate, 5.0 / self.rate, 20.0 / self.rate]

    def to_dict(self):
        return {"family": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Gaussian(Density1D):
    mean: float
    std: float
    family = "gaussian"

    def __post_init__(self):
        if not math.isfinite(float(self.mean)):
            raise ValidationError("mean must be finite")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "std", _finite_positive("std", self.std))

    def pdf(self, x):
        z = (_as_array(x) - self.mean) / self.std
        return np.exp(-0.5 * z * z) / (self.std * math.sqrt(2.0 * math.pi))

    def cdf(self, x):
        return special.ndtr((_as_array(x) - self.mean) / self.std)

    def sf(self, x):
        return special.ndtr((self.mean - _as_array(x)) / self.std)

    def quantile(self, q):
        return self.mean + self.std * special.ndtri(np.asarray(q, dtype=float))

    def support(self):
        return -math.inf, math.inf

    def effective_support(self, tail: float = TAIL_MASS):
        # ndtri(1 - tail) loses digits; use the symmetric lower quantile
        half = -float(special.ndtri(tail)) * self.std
        return self.mean - half, self.mean + half

    def breakpoints(self):
        return [self.mean + k * self.std for k in (-6, -3, -1, 0, 1, 3, 6)]

    def to_dict(self):
        return {"family": "gaussian", "mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class Uniform(Density1D):
    lo: float
    hi: float
    family = "uniform"

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValidationError(f"uniform needs finite lo < hi, got ({lo}, {hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def pdf(self, x):
        x = _as_array(x)
        return np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def cdf(self, x):
        x = _as_array(x)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def quantile(self, q):
        return self.lo + np.asarray(q, dtype=float) * (self.hi - self.lo)

    def support(self):
        return self.lo, self.hi

    def breakpoints(self):
        return [self.lo, self.hi]

    def to_dict(self):
        return {"family": "uniform", "lo": self.lo, "hi": self.hi}


def _bisect_quantile(d: Density1D, q: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                     iters: int = 200) -> np.ndarray:
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = d.cdf(mid) < q
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(mid))):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Mixture(Density1D):
    components: tuple[tuple[float, Density1D], ...]
    family = "mixture"

    def __post_init__(self):
        comps = tuple((float(w), d) for w, d in self.components)
        if not comps:
            raise ValidationError("mixture needs at least one component")
        for w, d in comps:
            if not (math.isfinite(w) and w > 0):
                raise ValidationError("mixture weights must be positive")
            if not isinstance(d, Density1D):
                raise ValidationError("mixture components must be densities")
        total = sum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"mixture weights sum to {total!r}, not 1")
        object.__setattr__(self, "components", comps)

    def pdf(self, x):
        x = _as_array(x)
        return sum(w * d.pdf(x) for w, d in self.components)

    def cdf(self, x):
        x = _as_array(x)
        return np.clip(sum(w * d.cdf(x) for w, d in self.components), 0.0, 1.0)

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        # the mixture quantile lies between the extreme component quantiles
        qs = np.array([np.broadcast_to(d.quantile(q), q.shape) for _, d in self.components])
        return _bisect_quantile(self, q, qs.min(axis=0), qs.max(axis=0))

    def support(self):
        sup = [d.support() for _, d in self.components]
        return min(s[0] for s in sup), max(s[1] for s in sup)

    def breakpoints(self):
        return sorted({b for _, d in self.components for b in d.breakpoints()})

    def to_dict(self):
        return {
            "family": "mixture",
            "components": [dict(weight=w, **d.to_dict()) for w, d in self.components],
        }


@dataclass(frozen=True)
class Tabulated(Density1D):
    """Piecewise-linear density through ``(grid, values)``, renormalised."""

    grid: tuple[float, ...]
    values: tuple[float, ...]
    _cum: np.ndarray = field(init=False, repr=False, compare=False)
    family = "tabulated"

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.size < 2 or g.shape != v.shape:
            raise ValidationError("tabulated density needs matching grid/values of length >= 2")
        if not np.all(np.isfinite(g)) or not np.all(np.diff(g) > 0):
            raise ValidationError("tabulated grid must be finite and strictly increasing")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValidationError("tabulated pdf values must be finite and nonnegative")
        cells = 0.5 * (v[1:] + v[:-1]) * np.diff(g)
        area = cells.sum()
        if area <= 0:
            raise ValidationError("tabulated density has zero mass")
        if abs(area - 1.0) > 1e-12:  # keeps to_dict/from_dict round trips exact
            v, cells = v / area, cells / area
        cum = np.concatenate([[0.0], np.cumsum(cells)])
        cum[-1] = 1.0
        object.__setattr__(self, "grid", tuple(g.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        object.__setattr__(self, "_cum", cum)

    def pdf(self, x):
        x = _as_array(x)
        g = np.asarray(self.grid)
        return np.interp(x, g, self.values, left=0.0, right=0.0)

    def cdf(self, x):
        x = _as_array(x)
        g = np.asarray(self.grid)
        v = np.asarray(self.values)
        j = np.clip(np.searchsorted(g, x, side="right") - 1, 0, g.size - 2)
        t = np.clip(x - g[j], 0.0, g[j + 1] - g[j])
        slope = (v[j + 1] - v[j]) / (g[j + 1] - g[j])
        out = self._cum[j] + v[j] * t + 0.5 * slope * t * t
        out = np.where(x <= g[0], 0.0, np.where(x >= g[-1], 1.0, out))
        return np.clip(out, 0.0, 1.0)

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        g = self.grid
        return _bisect_quantile(self, q, np.full(q.shape, g[0]), np.full(q.shape, g[-1]))

    def support(self):
        return self.grid[0], self.grid[-1]

    def breakpoints(self):
        return list(self.grid)

    def to_dict(self):
        return {"family": "tabulated", "grid": list(self.grid), "pdf": list(self.values)}


@dataclass(frozen=True)
class Scenario:
    """Nominal densities, perturbed densities and class priors."""

    f0: Density1D
    f1: Density1D
    f0_adv: Density1D
    f1_adv: Density1D
    p0: float = 0.5
    p1: float | None = None

    def __post_init__(self):
        p0 = float(self.p0)
        p1 = 1.0 - p0 if self.p1 is None else float(self.p1)
        if not (0.0 < p0 < 1.0 and 0.0 < p1 < 1.0):
            raise ValidationError(f"priors must lie in (0, 1), got p0={p0}, p1={p1}")
        if abs(p0 + p1 - 1.0) > 1e-12:
            raise ValidationError(f"priors must sum to 1, got {p0 + p1!r}")
        for name in ("f0", "f1", "f0_adv", "f1_adv"):
            if not isinstance(getattr(self, name), Density1D):
                raise ValidationError(f"{name} must be a Density1D")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)

    @property
    def nominal(self) -> tuple[Density1D, Density1D]:
        return self.f0, self.f1

    @property
    def perturbed(self) -> tuple[Density1D, Density1D]:
        return self.f0_adv, self.f1_adv

    @property
    def priors(self) -> tuple[float, float]:
        return self.p0, self.p1

    def densities(self) -> tuple[Density1D, ...]:
        return self.f0, self.f1, self.f0_adv, self.f1_adv

    def support_hull(self, tail: float = TAIL_MASS) -> tuple[float, float]:
        """Smallest interval holding all four densities up to ``tail`` per side."""
        sup = [d.effective_support(tail) for d in self.densities()]
        return min(s[0] for s in sup), max(s[1] for s in sup)


def exponential_scenario(rate0: float, rate1: float, rate0_adv: float, rate1_adv: float,
                         p0: float = 0.5) -> Scenario:
    return Scenario(Exponential(rate0), Exponential(rate1),
                    Exponential(rate0_adv), Exponential(rate1_adv), p0)


def pdf_at(d: Density1D, x):
    out = d.pdf(x)
    return float(out) if np.ndim(out) == 0 else out


def cdf_at(d: Density1D, x):
    out = d.cdf(x)
    return float(out) if np.ndim(out) == 0 else out


def sample(d: Density1D, n: int, seed: int | np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling; identical output for identical seeds."""
    if n < 1:
        raise ValidationError("sample size must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.random(n)
    # avoid the infinite quantile at exactly 0
    u = np.maximum(u, np.finfo(float).tiny)
    return np.asarray(d.quantile(u), dtype=float)


def integrate_pdf(d: Density1D, a: float = -math.inf, b: float = math.inf,
                  epsabs: float = QUAD_ABS_TOL) -> float:
    """Adaptive quadrature of ``d.pdf`` over ``[a, b]``.

    The integration range is clipped to the density's effective support and
    split at the density's breakpoints. Raises :class:`NumericalError` when the
    estimated error exceeds ``epsabs``.
    """
    if not b > a:
        return 0.0
    lo, hi = d.effective_support()
    a, b = max(a, lo), min(b, hi)
    if not b > a:
        return 0.0
    cuts = [a] + [p for p in d.breakpoints() if a < p < b] + [b]
    total, err = 0.0, 0.0
    for left, right in zip(cuts[:-1], cuts[1:]):
        val, e = integrate.quad(lambda t: float(d.pdf(t)), left, right,
                                epsabs=epsabs / len(cuts), epsrel=0.0, limit=QUAD_LIMIT)
        total += val
        err += e
    if err > epsabs:
        raise NumericalError(
            f"quadrature over [{a}, {b}] reached error {err:.3g} > {epsabs:.3g}", achieved=err
        )
    return total


def check_normalised(d: Density1D, tol: float = 1e-8) -> float:
    """Return the quadrature mass of ``d``; raise if it is not 1 within ``tol``."""
    mass = integrate_pdf(d)
    if abs(mass - 1.0) > tol:
        raise ValidationError(f"density integrates to {mass!r}")
    return mass


def from_dict(spec: dict) -> Density1D:
    """Build a density from a plain mapping such as a parsed TOML table."""
    spec = dict(spec)
    family = str(spec.pop("family", "")).lower()
    allowed = {
        "exponential": {"rate"},
        "gaussian": {"mean", "std"},
        "normal": {"mean", "std"},
        "uniform": {"lo", "hi"},
        "mixture": {"components"},
        "tabulated": {"grid", "pdf"},
    }
    if family not in allowed:
        raise ValidationError(f"unknown density family {family!r}")
    extra = set(spec) - allowed[family]
    missing = allowed[family] - set(spec)
    if extra:
        raise ValidationError(f"unknown keys for {family}: {sorted(extra)}")
    if missing:
        raise ValidationError(f"missing keys for {family}: {sorted(missing)}")
    if family == "exponential":
        return Exponential(spec["rate"])
    if family in ("gaussian", "normal"):
        return Gaussian(spec["mean"], spec["std"])
    if family == "uniform":
        return Uniform(spec["lo"], spec["hi"])
    if family == "tabulated":
        return Tabulated(tuple(spec["grid"]), tuple(spec["pdf"]))
    comps: list[tuple[float, Density1D]] = []
    for c in spec["components"]:
        c = dict(c)
        if "weight" not in c:
            raise ValidationError("mixture component needs a weight")
        w = c.pop("weight")
        comps.append((w, from_dict(c)))
    return Mixture(tuple(comps))


def mixture(weights: Sequence[float], comps: Sequence[Density1D]) -> Mixture:
    return Mixture(tuple(zip(weights, comps)))
