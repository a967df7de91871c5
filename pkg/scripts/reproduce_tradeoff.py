"""Optimal vs symmetric tradeoff curve for the exponential example.

Writes a CSV with both curves; with ``--plot`` also saves a PNG (needs
matplotlib).

    python scripts/reproduce_tradeoff.py --out tradeoff.csv --plot tradeoff.png
"""

import argparse
import csv
import math

import numpy as np

from abstain.classifier import Classifier1D
from abstain.densities import exponential_scenario
from abstain.design import sweep_tradeoff, symmetric_design
from abstain.risk import nominal_error


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=50)
    ap.add_argument("--out", default="tradeoff.csv")
    ap.add_argument("--plot", help="optional PNG path")
    args = ap.parse_args()

    s = exponential_scenario(1.5, 0.5, 1.2, 0.7, p0=0.5)
    y = (math.log(3.0),)
    e0 = nominal_error(s, Classifier1D(y))
    zetas = np.linspace(e0, 1.0, args.points)
    rows = sweep_tradeoff(s, y, zetas)
    sym = [symmetric_design(s, y, z) for z in zetas]

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["zeta", "e_adv_optimal", "e_adv_symmetric", "gamma_1_1", "gamma_1_2", "status"])
        for r, q in zip(rows, sym):
            w.writerow([repr(r.zeta), repr(r.e_adv), repr(q.e_adv_achieved), *map(repr, r.gamma), r.status])
    print(f"wrote {args.out}: e_adv {rows[0].e_adv:.5f} at zeta={e0:.5f}, {rows[-1].e_adv:.1e} at zeta=1")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot([r.e_nom for r in rows], [r.e_adv for r in rows], label="optimal")
        ax.plot([q.e_nom_achieved for q in sym], [q.e_adv_achieved for q in sym], "--", label="symmetric")
        ax.set_xlabel("nominal error")
        ax.set_ylabel("adversarial error")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        print(f"wrote {args.plot}")


if __name__ == "__main__":
    main()
