#!/usr/bin/env python3
"""Remainder decay study: fit log-log slopes of the expansion remainder
against the multi-precision resolvent for one bundled potential."""

import argparse
from fractions import Fraction

from dtl.expansion import expand
from dtl.oracles import remainder_slope
from dtl.cli import resolve_input
from dtl.potentials import load_potential


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("input", nargs="?", default="b5_third_kind.json")
    parser.add_argument("--sites", type=int, nargs="+", default=[-3, 0, 4])
    parser.add_argument("--kappa-base", default="1/16")
    parser.add_argument("--steps", type=int, default=11)
    args = parser.parse_args()

    pot = load_potential(resolve_input(args.input))
    result = expand(pot)
    print(f"case {result.case_id}, computed orders {result.j_min}..{result.order}")
    for N in range(result.j_min, result.order + 1):
        rep = remainder_slope(pot, result, N, args.sites,
                              kappa_base=Fraction(args.kappa_base), steps=args.steps)
        slopes = [f"{e.slope:+.2f}" if e.slope is not None else " flat"
                  for e in rep.entries]
        mark = "pass" if rep.passed else "FAIL"
        print(f"N={N:+d} [{mark}] slopes: {' '.join(slopes)}")


if __name__ == "__main__":
    main()
