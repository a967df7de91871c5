"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the pytest
terminal summary.  Run directly with ``python tests/test_acceptance.py`` to
get just those lines.
"""

import math
import time

import mpmath
import numpy as np
import pytest

from abstain.classifier import Classifier1D, RegionSpecD
from abstain.densities import Exponential, Gaussian, Mixture, Scenario
from abstain.design import (
    KKT_TOL,
    DesignProblem,
    grid_search_design,
    kkt_residuals,
    solve_design,
    sweep_tradeoff,
    symmetric_design,
)
from abstain.empirical import make_blobs, parse_grid, sweep_pa, train_model
from abstain.risk import (
    SampledScenario,
    adversarial_error,
    brute_force_errors,
    error_gradients,
    mc_errors,
    nominal_error,
)

from acceptance_report import record
from instances import (
    example1,
    random_boundaries,
    random_classifier,
    random_exponential_scenario,
    random_gamma,
    random_scenario,
)

S, Y = example1()


def test_criterion_1_nominal_endpoint():
    t0 = time.perf_counter()
    e = nominal_error(S, Classifier1D(Y))
    dt = time.perf_counter() - t0
    exact = float(0.5 * mpmath.power(3, -1.5) + 0.5 * (1 - mpmath.power(3, -0.5)))
    ok = abs(e - 0.30755) <= 1e-4 and round(e, 2) == 0.31 and abs(e - exact) <= 1e-14 and dt < 1.0
    record(1, "no-abstain nominal error", ok, f"e_nom={e:.6f} (exact {exact:.6f}), {dt * 1e3:.2f} ms")
    assert ok


def test_criterion_2_sweep_endpoints():
    e0 = nominal_error(S, Classifier1D(Y))
    t0 = time.perf_counter()
    rows = sweep_tradeoff(S, Y, list(np.linspace(e0, 1.0, 50)))
    dt = time.perf_counter() - t0
    first, last = rows[0], rows[-1]
    ok = (abs(first.e_adv - 0.40210) <= 1e-3 and max(first.gamma) <= 1e-9
          and last.e_adv <= 1e-6 and len(rows) == 50 and dt < 30.0)
    record(2, "tradeoff-curve endpoints", ok,
           f"({first.zeta:.5f}, {first.e_adv:.6f}) and ({last.zeta:.0f}, {last.e_adv:.1e}), "
           f"50 points in {dt:.2f} s")
    assert ok


def test_criterion_3_optimal_dominates():
    e0 = nominal_error(S, Classifier1D(Y))
    zetas = [e0 + k * (1 - e0) / 11 for k in range(1, 11)]
    vs_grid, strict, worst = 0, 0, -math.inf
    for z in zetas:
        p = DesignProblem(S, Y, z)
        sol = solve_design(p)
        grid = grid_search_design(p, 400)
        sym = symmetric_design(S, Y, z)
        assert abs(sym.e_nom_achieved - sol.e_nom_achieved) <= 1e-7
        worst = max(worst, sol.e_adv_achieved - grid.e_adv_achieved)
        vs_grid += sol.e_adv_achieved <= grid.e_adv_achieved + 1e-4
        strict += sym.e_adv_achieved - sol.e_adv_achieved > 1e-9
    ok = vs_grid == 10 and strict >= 8
    record(3, "optimal vs grid and symmetric", ok,
           f"<= grid+1e-4 on {vs_grid}/10 (worst {worst:+.1e}), strictly below symmetric on {strict}/10")
    assert ok


def _positive_scenario(rng):
    """Wide Gaussian components so densities stay well above underflow on [-4, 4]."""
    def dens():
        if rng.random() < 0.5:
            return Gaussian(rng.uniform(-2, 2), rng.uniform(1.0, 3.0))
        w = rng.dirichlet(np.ones(2))
        return Mixture(tuple((float(wi), Gaussian(rng.uniform(-2, 2), rng.uniform(1.0, 3.0))) for wi in w))
    return Scenario(dens(), dens(), dens(), dens(), p0=float(rng.uniform(0.2, 0.8)))


def _enlarge(rng, y, gamma):
    """gamma' >= gamma with a strict increase somewhere and intervals still disjoint."""
    y, g = np.asarray(y), np.array(gamma)
    n = y.size
    room = np.empty(2 * n)
    room[0], room[-1] = 1.5, 1.5
    for i in range(n - 1):
        free = (y[i + 1] - g[2 * i + 2]) - (y[i] + g[2 * i + 1])
        room[2 * i + 1] = room[2 * i + 2] = 0.45 * free
    grow = rng.random(2 * n) < 0.5
    grow[rng.integers(2 * n)] = True
    return tuple(g + np.where(grow, rng.uniform(0.2, 1.0, 2 * n) * room, 0.0))


def test_criterion_4_monotonicity():
    rng = np.random.default_rng(4)
    bad, min_nom, min_adv = 0, math.inf, math.inf
    for _ in range(500):
        s = _positive_scenario(rng)
        y = random_boundaries(rng, int(rng.integers(1, 7)), -3.0, 3.0)
        g = random_gamma(rng, y, fill=0.6)
        c, c2 = Classifier1D(y, g), Classifier1D(y, _enlarge(rng, y, g))
        a = brute_force_errors(s, c, integrate="quadrature")
        b = brute_force_errors(s, c2, integrate="quadrature")
        d_nom, d_adv = b.e_nom - a.e_nom, a.e_adv - b.e_adv
        min_nom, min_adv = min(min_nom, d_nom), min(min_adv, d_adv)
        bad += not (d_nom > 1e-10 and d_adv > 1e-10)
    ok = bad == 0
    record(4, "monotonicity in the abstain region", ok,
           f"{500 - bad}/500 instances; smallest margins e_nom {min_nom:.2e}, e_adv {min_adv:.2e}")
    assert ok


def _kkt_ok(p, sol):
    con, stat = kkt_residuals(p, sol.gamma_star, sol.lam)
    free = ~np.asarray(sol.pinned)
    stat_res = float(np.max(np.abs(stat[free]))) if free.any() else 0.0
    return sol.converged and abs(con) <= KKT_TOL and stat_res <= KKT_TOL and sol.lam > 0, abs(con), stat_res


def test_criterion_5_kkt_certificates():
    rng = np.random.default_rng(5)
    passed, worst_con, worst_stat, statuses = 0, 0.0, 0.0, []
    for k in range(20):
        if k % 2 == 0:
            s, y = random_exponential_scenario(rng), (float(rng.uniform(0.3, 2.5)),)
        else:
            s, y = random_scenario(rng), random_boundaries(rng, int(rng.integers(1, 4)))
        lo = nominal_error(s, Classifier1D(y))
        p = DesignProblem(s, y, lo + rng.uniform(0.05, 0.95) * (1 - lo))
        sol = solve_design(p)
        ok, con, stat = _kkt_ok(p, sol)
        passed += ok
        statuses.append(sol.status)
        worst_con, worst_stat = max(worst_con, con), max(worst_stat, stat)
    ok = passed == 20
    record(5, "KKT certificates", ok,
           f"{passed}/20 certified; max |e_nom-zeta| {worst_con:.1e}, max stationarity {worst_stat:.1e}")
    assert ok, statuses


def test_criterion_6_gradients():
    rng = np.random.default_rng(6)
    h, checked, bad, worst = 1e-6, 0, 0, 0.0
    for _ in range(100):
        s = random_scenario(rng) if rng.random() < 0.8 else random_exponential_scenario(rng)
        c = random_classifier(rng, n_max=6)
        if isinstance(s.f0, Exponential):
            y = random_boundaries(rng, int(rng.integers(1, 7)), 0.5, 6.0)
            c = Classifier1D(y, random_gamma(rng, y, fill=0.4))
        grad = error_gradients(s, c)
        g = np.array(c.gamma)
        for k in range(g.size):
            up, dn = g.copy(), g.copy()
            up[k] += h
            dn[k] -= h
            cu, cd = c.with_gamma(up), c.with_gamma(dn)
            for analytic, fn in ((grad.d_enom[k], nominal_error), (grad.d_eadv[k], adversarial_error)):
                fd = (fn(s, cu) - fn(s, cd)) / (2 * h)
                err = abs(analytic - fd)
                worst = max(worst, err)
                bad += err > max(1e-6, 1e-4 * abs(fd))
                checked += 1
    ok = bad == 0
    record(6, "gradient vs central differences", ok,
           f"100 instances, {checked - bad}/{checked} partials within tolerance, max abs error {worst:.1e}")
    assert ok


def test_criterion_7_oracle_equivalence():
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(200):
        if k % 4 == 3:
            s = random_exponential_scenario(rng)
            y = random_boundaries(rng, int(rng.integers(1, 7)), 0.2, 6.0)
            c = Classifier1D(y, random_gamma(rng, y))
        else:
            s, c = random_scenario(rng), random_classifier(rng, n_max=6)
        bf = brute_force_errors(s, c)
        worst = max(worst, abs(nominal_error(s, c) - bf.e_nom), abs(adversarial_error(s, c) - bf.e_adv))
    ok = worst <= 1e-9
    record(7, "closed form vs definition-level oracle", ok, f"200 instances, max deviation {worst:.1e}")
    assert ok


def _mc_scenario(rng):
    if rng.random() < 0.5:
        s = random_exponential_scenario(rng)
        y = (float(rng.uniform(0.3, 2.0)),)
    else:
        s = Scenario(*(Gaussian(rng.uniform(-2, 2), rng.uniform(0.5, 2.0)) for _ in range(4)),
                     p0=float(rng.uniform(0.2, 0.8)))
        y = random_boundaries(rng, int(rng.integers(1, 4)), -2.5, 2.5)
    return s, Classifier1D(y, random_gamma(rng, y))


@pytest.mark.slow
def test_criterion_8_monte_carlo():
    rng = np.random.default_rng(8)
    inside = 0
    for trial in range(100):
        s, c = _mc_scenario(rng)
        ref = brute_force_errors(s, c, integrate="quadrature")
        rep = mc_errors(SampledScenario.from_scenario(s), RegionSpecD.from_classifier(c), 1_000_000,
                        seed=1000 + trial, threads=4)
        inside += (abs(rep.e_nom - ref.e_nom) <= 4 * rep.stderr
                   and abs(rep.e_adv - ref.e_adv) <= 4 * rep.stderr_adv)
    ss = SampledScenario.gaussian([-0.5, 0.2, 0.0], [0.6, -0.1, 0.3], [-0.2, 0.2, 0.0], [0.3, -0.1, 0.3],
                                  std=1.0, p0=0.4)
    r = RegionSpecD.slab(3, 0.4)
    a = mc_errors(ss, r, 1_000_000, seed=1, threads=4)
    b = mc_errors(ss, r, 1_000_000, seed=2, threads=4)
    slab_ok = (abs(a.e_nom - b.e_nom) <= 4 * math.hypot(a.stderr, b.stderr)
               and abs(a.e_adv - b.e_adv) <= 4 * math.hypot(a.stderr_adv, b.stderr_adv))
    ok = inside >= 99 and slab_ok
    record(8, "Monte Carlo consistency", ok,
           f"1-D: {inside}/100 within 4 stderr; d=3 slab seeds agree: {slab_ok} "
           f"(e_nom {a.e_nom:.5f} vs {b.e_nom:.5f})")
    assert ok


def test_criterion_9_empirical_sweep():
    t0 = time.perf_counter()
    train, test = make_blobs(seed=0)
    model = train_model(train, l2=1e-3, seed=0)
    grid = parse_grid("0:1:0.05")
    reps = sweep_pa(model, test, grid, xi=0.3)
    dt = time.perf_counter() - t0
    e_nom = np.array([r.e_nom for r in reps])
    e_adv = np.array([r.e_adv for r in reps])
    frac = np.array([r.abstain_fraction for r in reps])
    pa = np.array(grid)
    order = np.lexsort((-e_adv, e_nom))
    checks = {
        "e_nom nondecreasing": bool(np.all(np.diff(e_nom) >= 0)),
        "e_adv nonincreasing": bool(np.all(np.diff(e_adv) <= 0)),
        "abstain nondecreasing": bool(np.all(np.diff(frac) >= 0)),
        "zero below 1/3": bool(np.all(frac[pa <= 1 / 3] == 0)),
        "one at p_a=1": bool(frac[-1] == 1.0),
        "monotone front": bool(np.all(np.diff(e_adv[order]) <= 0)),
        "under 60 s": dt < 60.0,
    }
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    record(9, "empirical threshold sweep", ok,
           f"{len(grid)} thresholds, e_nom {e_nom[0]:.3f}->{e_nom[-1]:.3f}, "
           f"e_adv {e_adv[0]:.3f}->{e_adv[-1]:.3f}, {dt:.1f} s" + (f"; failed: {failed}" if failed else ""))
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
