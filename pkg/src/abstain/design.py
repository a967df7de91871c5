"""Design of the 1-D abstain region: minimise adversarial error subject to
a nominal-error budget ``zeta``.

Given a multiplier ``lam`` the Lagrangian ``e_adv + lam * (e_nom - zeta)``
separates over the half-widths, because each half-width only moves its own
abstain edge.  Stationarity for half-width ``k`` reads

    -d e_adv / d gamma_k  =  lam * d e_nom / d gamma_k,

i.e. the log-ratio ``phi_k(gamma) = log(-de_adv_k) - log(de_nom_k)`` equals
``log(lam)``.  On every stretch where ``phi_k`` decreases, that equation has a
unique root which is a coordinate-wise minimum of the Lagrangian, so each
stretch is a branch ``gamma_k(lam)`` continuous and nonincreasing in ``lam``.
Stretches where ``phi_k`` increases hold stationary maximisers of the
coordinate's term; second-order necessary conditions allow at most one such
coordinate.  For a choice of one branch per coordinate the active budget
``e_nom = zeta`` becomes a scalar root-find in ``log(lam)`` (log-spaced
brackets, then Brent).  Every branch combination is a start; the KKT point
with the least adversarial error wins.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import optimize

from .classifier import Classifier1D
from .densities import Exponential, Scenario
from .exceptions import DomainError, ValidationError
from .risk import _thread_cap, adversarial_error, error_gradients, nominal_error

KKT_TOL = 1e-7
GRID_POINTS = 257
LOG_FLOOR = -700.0
MAX_COMBOS = 512
N_BRACKETS = 8
# fraction of each inter-boundary gap left uncovered so abstain intervals stay disjoint
GAP_MARGIN = 1e-9


@dataclass(frozen=True)
class DesignProblem:
    scenario: Scenario
    y: tuple[float, ...]
    zeta: float

    def __post_init__(self):
        object.__setattr__(self, "y", Classifier1D(self.y).y)
        zeta = float(self.zeta)
        if not math.isfinite(zeta):
            raise ValidationError("zeta must be finite")
        object.__setattr__(self, "zeta", zeta)

    @property
    def n(self) -> int:
        return len(self.y)

    def classifier(self, gamma: Sequence[float] | None = None) -> Classifier1D:
        return Classifier1D(self.y, None if gamma is None else tuple(gamma))

    def baseline(self) -> float:
        """Nominal error with no abstaining, the smallest attainable budget."""
        return nominal_error(self.scenario, self.classifier())

    def check_feasible(self) -> None:
        lo = self.baseline()
        if self.zeta < lo - 1e-12 or self.zeta > 1.0 + 1e-12:
            raise DomainError(f"zeta={self.zeta} outside the attainable range [{lo}, 1]")


@dataclass(frozen=True)
class DesignSolution:
    gamma_star: tuple[float, ...]
    e_nom_achieved: float
    e_adv_achieved: float
    lam: float
    stationarity_residual: float
    constraint_residual: float
    status: str
    pinned: tuple[bool, ...] = ()

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def gamma_upper_bounds(s: Scenario, y: Sequence[float]) -> np.ndarray:
    """Largest half-widths keeping abstain intervals disjoint and inside the support."""
    y = np.asarray(y, dtype=float)
    lo, hi = s.support_hull()
    n = y.size
    upper = np.empty(2 * n)
    for i in range(n):
        left = y[i] - lo
        right = hi - y[i]
        if i > 0:
            left = min(left, 0.5 * (y[i] - y[i - 1]) * (1 - GAP_MARGIN))
        if i < n - 1:
            right = min(right, 0.5 * (y[i + 1] - y[i]) * (1 - GAP_MARGIN))
        upper[2 * i] = max(left, 0.0)
        upper[2 * i + 1] = max(right, 0.0)
    return upper


def kkt_residuals(p: DesignProblem, gamma: Sequence[float], lam: float) -> tuple[float, np.ndarray]:
    """Constraint residual ``e_nom - zeta`` and per-coordinate stationarity
    ``de_adv/dgamma + lam * de_nom/dgamma``."""
    c = p.classifier(gamma)
    grad = error_gradients(p.scenario, c)
    return nominal_error(p.scenario, c) - p.zeta, grad.d_eadv + lam * grad.d_enom


def cross_product_residuals(p: DesignProblem, gamma: Sequence[float],
                            active: Sequence[bool] | None = None) -> np.ndarray:
    """All pairwise ``de_adv_a * de_nom_b - de_adv_b * de_nom_a`` over active coordinates."""
    grad = error_gradients(p.scenario, p.classifier(gamma))
    idx = [k for k in range(2 * p.n) if active is None or active[k]]
    out = [grad.d_eadv[a] * grad.d_enom[b] - grad.d_eadv[b] * grad.d_enom[a]
           for a, b in itertools.combinations(idx, 2)]
    return np.asarray(out, dtype=float)


class _Coordinate:
    """One half-width: its edge, derivative log-ratio and nominal increment."""

    def __init__(self, s: Scenario, y: float, i: int, side: int, upper: float):
        self.y = y
        self.upper = upper
        self.sign = -1.0 if side == 0 else 1.0
        q = 1 if (i + 1) % 2 == 0 else 0
        r = 1 - q
        p = (s.p0, s.p1)
        # left edge costs class q nominally and saves class r adversarially; right edge swaps
        nom, adv = (q, r) if side == 0 else (r, q)
        self.pn, self.fn = p[nom], s.nominal[nom]
        self.pa, self.fa = p[adv], s.perturbed[adv]
        self.base = float(self.fn.cdf(y))

    def edge(self, g):
        return self.y + self.sign * np.asarray(g, dtype=float)

    def d_nom(self, g):
        return self.pn * self.fn.pdf(self.edge(g))

    def d_adv(self, g):
        return self.pa * self.fa.pdf(self.edge(g))

    def nominal_increment(self, g):
        return self.pn * self.sign * (self.fn.cdf(self.edge(g)) - self.base)

    def phi(self, g):
        with np.errstate(divide="ignore"):
            a = np.maximum(np.log(self.d_adv(g)), LOG_FLOOR)
            b = np.maximum(np.log(self.d_nom(g)), LOG_FLOOR)
        return a - b


@dataclass
class _Branch:
    """``gamma_k`` as a function of ``t = log(lam)`` along one monotone stretch.

    ``kind`` is ``"const"`` (pinned), ``"desc"`` (log-ratio decreasing: the
    coordinate minimises its Lagrangian term) or ``"asc"`` (increasing: a
    stationary maximiser, admissible for at most one coordinate).
    """

    coord: _Coordinate
    kind: str
    grid: np.ndarray
    phis: np.ndarray

    @classmethod
    def pinned(cls, coord: _Coordinate, value: float) -> "_Branch":
        return cls(coord, "const", np.array([value]), coord.phi(np.array([value])))

    def _sorted(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "desc":
            return self.phis[::-1], self.grid[::-1]
        return self.phis, self.grid

    def approx(self, t: float) -> float:
        if self.kind == "const":
            return float(self.grid[0])
        ph, g = self._sorted()
        return float(np.interp(t, ph, g))

    def exact(self, t: float) -> float:
        if self.kind == "const":
            return float(self.grid[0])
        ph, g = self._sorted()
        if t <= ph[0]:
            return float(g[0])
        if t >= ph[-1]:
            return float(g[-1])
        j = int(np.searchsorted(ph, t, side="right"))
        j = min(max(j, 1), ph.size - 1)
        a, b = float(g[j - 1]), float(g[j])
        fa = float(self.coord.phi(a)) - t
        fb = float(self.coord.phi(b)) - t
        if fa == 0.0:
            return a
        if fb == 0.0:
            return b
        if fa * fb > 0:
            w = (t - ph[j - 1]) / (ph[j] - ph[j - 1])
            return a + w * (b - a)
        return optimize.brentq(lambda x: float(self.coord.phi(x)) - t, a, b,
                               xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def _coordinate_grid(upper: float) -> np.ndarray:
    if upper <= 0:
        return np.array([0.0])
    g = np.concatenate([np.linspace(0.0, upper, GRID_POINTS),
                        upper * np.geomspace(1e-7, 1.0, GRID_POINTS)])
    return np.unique(np.concatenate([[0.0], g]))


def _branches(coord: _Coordinate) -> list[_Branch]:
    """Monotone stretches of the log-ratio plus pinned-at-bound options."""
    grid = _coordinate_grid(coord.upper)
    if grid.size == 1:
        return [_Branch.pinned(coord, 0.0)]
    phis = coord.phi(grid)
    step = np.diff(phis)
    tol = 1e-12 * np.maximum(1.0, np.abs(phis[:-1]))
    direction = np.where(step <= tol, -1, 1)
    out: list[_Branch] = []
    start = 0
    for k in range(1, direction.size + 1):
        if k == direction.size or direction[k] != direction[start]:
            kind = "desc" if direction[start] < 0 else "asc"
            out.append(_Branch(coord, kind, grid[start:k + 1], phis[start:k + 1]))
            start = k
    desc = [b for b in out if b.kind == "desc"]
    # pinned options are only needed where no descending stretch reaches the bound
    if not desc or desc[0].grid[0] > 0:
        out.insert(0, _Branch.pinned(coord, 0.0))
    if not desc or desc[-1].grid[-1] < coord.upper:
        out.append(_Branch.pinned(coord, float(coord.upper)))
    return out


class _Solver:
    def __init__(self, p: DesignProblem):
        self.p = p
        self.s = p.scenario
        self.upper = gamma_upper_bounds(self.s, p.y)
        self.coords = [_Coordinate(self.s, p.y[i], i, side, self.upper[2 * i + side])
                       for i in range(p.n) for side in (0, 1)]
        self.options = [_branches(c) for c in self.coords]
        self.e_nom0 = p.baseline()
        all_phi = np.concatenate([b.phis for opts in self.options for b in opts])
        self.t_lo = float(all_phi.min()) - 1.0
        self.t_hi = float(all_phi.max()) + 1.0

    def combos(self) -> list[tuple[_Branch, ...]]:
        """Branch combinations with at most one ascending stretch."""
        base = [[b for b in o if b.kind != "asc"] for o in self.options]
        out = list(itertools.product(*base))
        n_base = len(out)
        for k, o in enumerate(self.options):
            for asc in (b for b in o if b.kind == "asc"):
                rest = base[:k] + [[asc]] + base[k + 1:]
                out.extend(itertools.product(*rest))
        if len(out) <= MAX_COMBOS:
            return out
        # keep every all-descending combination, subsample the rest reproducibly
        rng = np.random.default_rng(0)
        budget = max(MAX_COMBOS - n_base, 0)
        extra = sorted(rng.choice(np.arange(n_base, len(out)), size=min(budget, len(out) - n_base),
                                  replace=False))
        return out[:n_base] + [out[i] for i in extra]

    def h(self, combo, t: float, exact: bool) -> float:
        gam = [b.exact(t) if exact else b.approx(t) for b in combo]
        inc = sum(float(b.coord.nominal_increment(g)) for b, g in zip(combo, gam))
        return self.e_nom0 + inc - self.p.zeta

    def certify(self, gamma: np.ndarray, lam: float, status: str = "converged") -> DesignSolution:
        c = Classifier1D(self.p.y, tuple(gamma))
        grad = error_gradients(self.s, c)
        stat = grad.d_eadv + lam * grad.d_enom
        # bound-active coordinates need only the sign condition of the multiplier
        at_zero = gamma <= 0.0
        at_top = gamma >= self.upper
        pinned = (at_zero & (stat >= -KKT_TOL)) | (at_top & (stat <= KKT_TOL))
        pinned &= np.abs(stat) > KKT_TOL
        free = ~pinned
        stat_res = float(np.max(np.abs(stat[free]))) if free.any() else 0.0
        e_nom = nominal_error(self.s, c)
        con = abs(e_nom - self.p.zeta)
        ok = con <= KKT_TOL and stat_res <= KKT_TOL and lam > 0
        if status == "converged" and not ok:
            status = "multistart_best"
        return DesignSolution(tuple(float(g) for g in gamma), e_nom, adversarial_error(self.s, c),
                              float(lam), stat_res, con, status, tuple(bool(v) for v in pinned))

    def _nodes(self, combo) -> np.ndarray:
        pts = [np.linspace(self.t_lo, self.t_hi, N_BRACKETS + 1)]
        for b in combo:
            if b.kind != "const":
                pts.append(np.array([b.phis[0], b.phis[-1]]))
        t = np.unique(np.concatenate(pts))
        mids = [np.linspace(a, b, 5)[1:-1] for a, b in zip(t[:-1], t[1:])]
        return np.unique(np.concatenate([t, *mids]))

    def _polish(self, combo, t0: float, a: float, b: float) -> float:
        f = lambda t: self.h(combo, t, exact=True)  # noqa: E731
        h0 = f(t0)
        if h0 == 0.0:
            return t0
        w = 1e-9 * max(1.0, abs(t0))
        while w < (b - a):
            lo, hi = max(a, t0 - w), min(b, t0 + w)
            hl, hh = f(lo), f(hi)
            if hl * hh <= 0:
                if hl == 0.0:
                    return lo
                if hh == 0.0:
                    return hi
                return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            w *= 8.0
        return t0

    def solve_combo(self, combo) -> list[DesignSolution]:
        nodes = self._nodes(combo)
        hs = np.array([self.h(combo, t, exact=False) for t in nodes])
        out = []
        for a, b, ha, hb in zip(nodes[:-1], nodes[1:], hs[:-1], hs[1:]):
            if ha * hb > 0 or (ha == 0 and hb == 0):
                continue
            if ha == 0:
                t = a
            elif hb == 0:
                t = b
            else:
                t = optimize.brentq(lambda t: self.h(combo, t, exact=False), a, b,
                                    xtol=1e-14, rtol=4 * np.finfo(float).eps)
            t = self._polish(combo, t, a, b)
            gamma = np.array([br.exact(t) for br in combo])
            out.append(self.certify(gamma, math.exp(t)))
        return out

    def endpoint(self, gamma: np.ndarray, use_max: bool) -> DesignSolution:
        phis = np.array([float(c.phi(g)) for c, g in zip(self.coords, gamma)])
        t = phis.max() if use_max else phis.min()
        return self.certify(gamma, math.exp(t))

    def solve(self) -> DesignSolution:
        p = self.p
        zero = np.zeros(2 * p.n)
        if p.zeta <= self.e_nom0 + KKT_TOL:
            return self.endpoint(zero, use_max=True)
        if p.zeta >= nominal_error(self.s, p.classifier(self.upper)) - KKT_TOL:
            return self.endpoint(self.upper.copy(), use_max=False)
        found: list[DesignSolution] = []
        for combo in self.combos():
            found.extend(self.solve_combo(combo))
        good = [f for f in found if f.converged]
        if good:
            return min(good, key=lambda f: f.e_adv_achieved)
        if p.n == 1:
            return grid_search_design(p, 400)
        if found:
            best = min(found, key=lambda f: (f.constraint_residual + f.stationarity_residual,
                                             f.e_adv_achieved))
            return replace(best, status="multistart_best")
        c = p.classifier()
        return DesignSolution(tuple(zero), self.e_nom0, adversarial_error(self.s, c), math.nan,
                              math.nan, abs(self.e_nom0 - p.zeta), "multistart_best")


def solve_design(p: DesignProblem) -> DesignSolution:
    """Return the best KKT point of the budget-constrained design problem."""
    p.check_feasible()
    return _Solver(p).solve()


def grid_search_design(p: DesignProblem, resolution: int = 400) -> DesignSolution:
    """Exhaustive search over a ``resolution x resolution`` grid of ``(g11, g12)``.

    Each axis is spaced uniformly in the nominal mass it adds, so the grid is
    equally fine in error units everywhere.  Only single-boundary problems.
    """
    if p.n != 1:
        raise ValidationError("grid search supports a single decision boundary")
    if resolution < 50:
        raise ValidationError("grid resolution must be >= 50")
    p.check_feasible()
    s = p.scenario
    y = p.y[0]
    u_left, u_right = gamma_upper_bounds(s, p.y)

    def axis(upper: float, cost) -> np.ndarray:
        if upper <= 0:
            return np.zeros(resolution)
        dense = np.unique(np.concatenate([np.linspace(0, upper, 20001),
                                          upper * np.geomspace(1e-9, 1, 2001), [0.0]]))
        c = np.maximum.accumulate(cost(dense))
        levels = np.linspace(c[0], c[-1], resolution)
        keep = np.concatenate([[True], np.diff(c) > 0])
        g = np.interp(levels, c[keep], dense[keep])
        g[0], g[-1] = 0.0, upper
        return g

    # n = 1: R0 = (-inf, y), R1 = [y, inf); left half-width eats H0 mass, right eats H1 mass
    a = axis(u_left, lambda g: s.p0 * (s.f0.cdf(y) - s.f0.cdf(y - g)))
    b = axis(u_right, lambda g: s.p1 * (s.f1.cdf(y + g) - s.f1.cdf(y)))
    enom = (s.p0 * s.f0.sf(y - a))[:, None] + (s.p1 * s.f1.cdf(y + b))[None, :]
    eadv = (s.p1 * s.f1_adv.cdf(y - a))[:, None] + (s.p0 * s.f0_adv.sf(y + b))[None, :]
    feasible = enom <= p.zeta + 1e-12
    if not feasible.any():
        raise DomainError("no grid point satisfies the nominal budget")
    masked = np.where(feasible, eadv, np.inf)
    i, j = np.unravel_index(np.argmin(masked), masked.shape)
    gamma = (float(a[i]), float(b[j]))
    c = p.classifier(gamma)
    grad = error_gradients(s, c)
    interior = np.array([0 < gamma[0] < u_left, 0 < gamma[1] < u_right]) & (grad.d_enom > 0)
    lam = float(np.mean(-grad.d_eadv[interior] / grad.d_enom[interior])) if interior.any() else math.nan
    e_nom = nominal_error(s, c)
    stat = grad.d_eadv + lam * grad.d_enom
    stat_res = float(np.max(np.abs(stat[interior]))) if interior.any() else 0.0
    return DesignSolution(gamma, e_nom, adversarial_error(s, c), lam, stat_res,
                          abs(e_nom - p.zeta), "fallback_grid", tuple(bool(v) for v in ~interior))


def exponential_kkt_residuals(p: DesignProblem, gamma11: float, gamma12: float) -> tuple[float, float]:
    """Closed-form KKT residuals for one boundary and four exponential densities.

    ``r1`` is the active budget, ``r2`` the stationarity cross-product
    ``p1^2 rt1 r1 e^{-rt1 (y-g11) - r1 (y+g12)} - p0^2 rt0 r0 e^{-rt0 (y+g12) - r0 (y-g11)}``.
    """
    s = p.scenario
    if p.n != 1 or not all(isinstance(d, Exponential) for d in s.densities()):
        raise ValidationError("needs one boundary and exponential densities")
    y = p.y[0]
    lo, hi = y - gamma11, y + gamma12
    if lo < 0 or gamma11 < 0 or gamma12 < 0:
        raise DomainError("abstain edge left of the exponential support")
    r0, r1 = s.f0.rate, s.f1.rate
    rt0, rt1 = s.f0_adv.rate, s.f1_adv.rate
    p0, p1 = s.p0, s.p1
    res1 = p0 * math.exp(-r0 * lo) - p1 * math.exp(-r1 * hi) + p1 - p.zeta
    res2 = (p1 ** 2 * rt1 * r1 * math.exp(-rt1 * lo - r1 * hi)
            - p0 ** 2 * rt0 * r0 * math.exp(-rt0 * hi - r0 * lo))
    return res1, res2


def symmetric_design(s: Scenario, y: Sequence[float], zeta: float) -> DesignSolution:
    """Reference (non-optimised) design: every half-width equal, clipped to its bound.

    Used as the comparison curve for the optimal tradeoff.
    """
    p = DesignProblem(s, tuple(y), zeta)
    p.check_feasible()
    upper = gamma_upper_bounds(s, p.y)

    def gam(t: float) -> np.ndarray:
        return np.minimum(t, upper)

    def h(t: float) -> float:
        return nominal_error(s, p.classifier(gam(t))) - zeta

    top = float(upper.max())
    if h(0.0) >= 0:
        t = 0.0
    elif h(top) <= 0:
        t = top
    else:
        t = optimize.brentq(h, 0.0, top, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    c = p.classifier(gam(t))
    e_nom = nominal_error(s, c)
    return DesignSolution(tuple(float(v) for v in gam(t)), e_nom, adversarial_error(s, c),
                          math.nan, math.nan, abs(e_nom - zeta), "symmetric")


@dataclass(frozen=True)
class TradeoffRow:
    zeta: float
    gamma: tuple[float, ...]
    e_nom: float
    e_adv: float
    status: str
    solution: DesignSolution | None = field(default=None, compare=False, repr=False)


def sweep_tradeoff(s: Scenario, y: Sequence[float], zeta_grid: Sequence[float],
                   threads: int | None = None) -> list[TradeoffRow]:
    """Solve the design problem for each budget; failures become error rows."""
    y = tuple(Classifier1D(y).y)
    zetas = [float(z) for z in zeta_grid]
    if any(b < a for a, b in zip(zetas[:-1], zetas[1:])):
        raise ValidationError("zeta grid must be sorted")

    def one(z: float) -> TradeoffRow:
        try:
            sol = solve_design(DesignProblem(s, y, z))
        except (DomainError, ValidationError, ArithmeticError, RuntimeError) as exc:
            nan = math.nan
            return TradeoffRow(z, (nan,) * (2 * len(y)), nan, nan, f"error: {exc}")
        return TradeoffRow(z, sol.gamma_star, sol.e_nom_achieved, sol.e_adv_achieved, sol.status, sol)

    threads = _thread_cap(threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, zetas))
    return [one(z) for z in zetas]
