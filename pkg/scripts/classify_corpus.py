#!/usr/bin/env python3
"""Classify every bundled potential and tabulate type, case and dimensions."""

from pathlib import Path

from dtl.chain import classify
from dtl.oracles import nullspace_oracle, threshold4_analysis
from dtl.potentials import load_potential

FIXTURES = Path(__file__).parent.parent / "src" / "dtl" / "fixtures"


def main():
    header = f"{'fixture':24} {'type':15} {'stage/case':10} {'d0':>3} {'d':>3} {'dt':>3} {'dqs':>4}  oracle  threshold4"
    print(header)
    print("-" * len(header))
    for path in sorted(FIXTURES.glob("*.json")):
        pot = load_potential(path)
        rep = classify(pot)
        dims = rep.dims
        oracle = "-"
        if pot.exact:
            oracle = "ok" if nullspace_oracle(pot).dims() == dims else "MISMATCH"
        upper = threshold4_analysis(pot)
        print(f"{path.stem:24} {rep.threshold_type:15} "
              f"{rep.stage}/{rep.case_label:8} "
              f"{dims['d0']:>3} {dims['d']:>3} {dims['dtilde']:>3} {dims['dqs']:>4}  "
              f"{oracle:6}  {upper.threshold_type}")


if __name__ == "__main__":
    main()
