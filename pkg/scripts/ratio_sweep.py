"""Tabulate t^alpha * int_0^t 2^j e^{-c(t-s)2^j} s^{-alpha} ds over j, t and alpha."""
import argparse

import numpy as np

from darcy_ec.diagnostics import lemma71_bound, lemma71_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.9])
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--jmin", type=int, default=-5)
    ap.add_argument("--jmax", type=int, default=10)
    ap.add_argument("--panels", type=int, default=40)
    args = ap.parse_args()

    t_list = np.logspace(-2, 2, 9)
    for a in args.alphas:
        tab = lemma71_check(range(args.jmin, args.jmax + 1), t_list, a, args.c, args.panels)
        print(f"alpha={a:g}  sup={tab.sup:.6f}  majorant={lemma71_bound(a, args.c):.6f}"
              f"  refinement change={tab.max_rel_change:.2e}")
        print("   j " + " ".join(f"{t:9.3g}" for t in t_list))
        for j, row in zip(tab.j_list, tab.refined):
            print(f"{j:4d} " + " ".join(f"{v:9.5f}" for v in row))


if __name__ == "__main__":
    main()
