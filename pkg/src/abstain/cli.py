"""Command-line front end.

Subcommands: ``errors``, ``design``, ``sweep``, ``mc``, ``empirical``,
``selfcheck``.  Output is CSV with a header row (``--json`` writes one JSON
object per row instead).  Exit codes: 0 success, 2 invalid input, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from contextlib import contextmanager
from typing import Sequence

import numpy as np

from .classifier import Classifier1D, RegionSpecD
from .densities import exponential_scenario
from .design import (
    DesignProblem,
    grid_search_design,
    solve_design,
    sweep_tradeoff,
    symmetric_design,
)
from .empirical import load_dataset, make_blobs, parse_grid, save_dataset, sweep_pa, train_model
from .exceptions import DomainError, NumericalError, ValidationError
from .risk import SampledScenario, brute_force_errors, evaluate, mc_errors
from .scenario_file import load_scenario

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

ERRORS_COLUMNS = ["e_nom", "e_adv", "abstain_mass", "method", "stderr"]
EMPIRICAL_COLUMNS = ["p_a", "e_nom", "e_adv", "abstain_fraction", "xi"]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@contextmanager
def _sink(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit(columns: Sequence[str], rows: Sequence[Sequence], out: str | None, as_json: bool) -> None:
    with _sink(out) as fh:
        if as_json:
            for r in rows:
                fh.write(json.dumps({c: (None if isinstance(v, float) and math.isnan(v) else v)
                                     for c, v in zip(columns, r)}) + "\n")
        else:
            fh.write(",".join(columns) + "\n")
            for r in rows:
                fh.write(",".join(_fmt(v) for v in r) + "\n")


def _classifier(args) -> tuple:
    sf = load_scenario(args.scenario)
    if sf.classifier is None:
        raise ValidationError("scenario file needs a [classifier] table with y")
    return sf.scenario, sf.classifier


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_errors(args) -> int:
    s, c = _classifier(args)
    if args.gamma is not None:
        c = c.with_gamma(_parse_floats(args.gamma))
    if args.method == "closed_form":
        rep = evaluate(s, c)
    else:
        rep = brute_force_errors(s, c, "cdf" if args.method == "brute_force" else "quadrature")
    _emit(ERRORS_COLUMNS, [rep.as_row()], args.out, args.json)
    return EXIT_OK


def _design_columns(n: int) -> list[str]:
    return ["zeta"] + [f"gamma_{i + 1}_{j + 1}" for i in range(n) for j in range(2)] + [
        "e_nom", "e_adv", "status"]


def cmd_design(args) -> int:
    s, c = _classifier(args)
    sol = solve_design(DesignProblem(s, c.y, args.zeta))
    row = [args.zeta, *sol.gamma_star, sol.e_nom_achieved, sol.e_adv_achieved, sol.status]
    _emit(_design_columns(c.n), [row], args.out, args.json)
    return EXIT_OK


def cmd_sweep(args) -> int:
    s, c = _classifier(args)
    lo = args.zeta_min if args.zeta_min is not None else DesignProblem(s, c.y, 1.0).baseline()
    hi = args.zeta_max
    if args.points < 1:
        raise ValidationError("--points must be >= 1")
    if hi < lo:
        raise ValidationError("--zeta-max must be >= --zeta-min")
    grid = [hi] if args.points == 1 else list(np.linspace(lo, hi, args.points))
    rows = [[r.zeta, *r.gamma, r.e_nom, r.e_adv, r.status]
            for r in sweep_tradeoff(s, c.y, grid, threads=args.threads)]
    _emit(_design_columns(c.n), rows, args.out, args.json)
    return EXIT_OK


def cmd_mc(args) -> int:
    s, c = _classifier(args)
    rep = mc_errors(SampledScenario.from_scenario(s), RegionSpecD.from_classifier(c),
                    args.samples, args.seed, threads=args.threads)
    _emit(ERRORS_COLUMNS, [rep.as_row()], args.out, args.json)
    return EXIT_OK


def cmd_empirical(args) -> int:
    grid = parse_grid(args.pa_grid)
    if (args.train is None) != (args.test is None):
        raise ValidationError("--train and --test must be given together")
    if args.train is not None:
        train = load_dataset(args.train)
        test = load_dataset(args.test, m=train.m)
    else:
        train, test = make_blobs(seed=args.seed)
    if args.dump_data:
        save_dataset(f"{args.dump_data}_train.csv", train)
        save_dataset(f"{args.dump_data}_test.csv", test)
    model = train_model(train, args.l2, seed=args.seed)
    rows = [r.as_row() for r in sweep_pa(model, test, grid, args.xi)]
    _emit(EMPIRICAL_COLUMNS, rows, args.out, args.json)
    return EXIT_OK


def selfcheck_results() -> list[tuple[str, bool, str]]:
    """Golden reproduction of the exponential example; one entry per check."""
    s = exponential_scenario(1.5, 0.5, 1.2, 0.7, p0=0.5)
    y = (math.log(3.0),)
    c = Classifier1D(y)
    out = []
    rep = evaluate(s, c)
    out.append(("no-abstain nominal error = 0.30755",
                abs(rep.e_nom - 0.30755) <= 1e-4 and round(rep.e_nom, 2) == 0.31,
                f"{rep.e_nom:.6f}"))
    exact_adv = 0.5 * 3 ** -1.2 + 0.5 * (1 - 3 ** -0.7)
    out.append(("no-abstain adversarial error", abs(rep.e_adv - exact_adv) <= 1e-9,
                f"{rep.e_adv:.6f}"))
    t0 = time.perf_counter()
    rows = sweep_tradeoff(s, y, list(np.linspace(rep.e_nom, 1.0, 50)))
    dt = time.perf_counter() - t0
    first, last = rows[0], rows[-1]
    out.append(("sweep endpoint at no abstaining",
                abs(first.e_adv - 0.40210) <= 1e-3 and max(first.gamma) <= 1e-9,
                f"e_adv={first.e_adv:.6f}"))
    out.append(("sweep endpoint at always abstaining", last.e_adv <= 1e-6, f"e_adv={last.e_adv:.2e}"))
    eadv = [r.e_adv for r in rows]
    out.append(("optimal curve nonincreasing", all(b <= a + 1e-12 for a, b in zip(eadv, eadv[1:])),
                f"{dt:.2f}s"))
    p = DesignProblem(s, y, 0.5)
    sol = solve_design(p)
    grid = grid_search_design(p, 400)
    sym = symmetric_design(s, y, 0.5)
    out.append(("KKT point at zeta=0.5",
                sol.converged and sol.constraint_residual <= 1e-7
                and sol.stationarity_residual <= 1e-7 and sol.lam > 0,
                f"lambda={sol.lam:.6f}"))
    out.append(("optimal beats grid and symmetric at zeta=0.5",
                sol.e_adv_achieved <= grid.e_adv_achieved + 1e-4
                and sol.e_adv_achieved < sym.e_adv_achieved,
                f"{sol.e_adv_achieved:.6f} vs grid {grid.e_adv_achieved:.6f}, "
                f"symmetric {sym.e_adv_achieved:.6f}"))
    return out


def cmd_selfcheck(args) -> int:
    ok = True
    for name, passed, detail in selfcheck_results():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}  ({detail})")
    return EXIT_OK if ok else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="abstain", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenario=True, out=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario TOML file")
        if out:
            p.add_argument("--out", help="output CSV (default: stdout)")
        p.add_argument("--json", action="store_true", help="one JSON object per row")

    p = sub.add_parser("errors", help="nominal/adversarial error of the file's classifier")
    common(p)
    p.add_argument("--gamma", help="override half-widths, comma separated")
    p.add_argument("--method", choices=["closed_form", "brute_force", "quadrature"],
                   default="closed_form")
    p.set_defaults(func=cmd_errors)

    p = sub.add_parser("design", help="optimal abstain region for one nominal budget")
    common(p)
    p.add_argument("--zeta", type=float, required=True)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("sweep", help="optimal tradeoff curve over a budget grid")
    common(p)
    p.add_argument("--zeta-min", type=float, help="default: no-abstain nominal error")
    p.add_argument("--zeta-max", type=float, default=1.0)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mc", help="Monte Carlo estimate of both errors")
    common(p)
    p.add_argument("--samples", type=int, required=True, help="samples per class")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("empirical", help="threshold sweep of a multi-class abstaining model")
    common(p, scenario=False)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--xi", type=float, default=0.3)
    p.add_argument("--pa-grid", default="0:1:0.05")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train", help="training CSV (label,f1,...,fd)")
    p.add_argument("--test", help="test CSV (label,f1,...,fd)")
    p.add_argument("--dump-data", metavar="PREFIX", help="write PREFIX_train.csv / PREFIX_test.csv")
    p.set_defaults(func=cmd_empirical)

    p = sub.add_parser("selfcheck", help="golden reproduction of the exponential example")
    p.set_defaults(func=cmd_selfcheck)
    return ap


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
