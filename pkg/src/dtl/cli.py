"""Command-line front end: classify / eigenbasis / expand / verify / threshold4 / kernel."""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .chain import classify
from .errors import FloatingAmbiguous
from .expansion import composition_matrix_element, expand, green_identity_check
from .kernels import g0_kernel
from .oracles import remainder_slope, threshold4_analysis
from .potentials import FactorizedPotential, RankOneTerm, load_potential
from .scalars import format_scalar
from .series import invert_laurent
from .chain import build_m_coefficients

BUNDLED_FIXTURES = Path(__file__).parent / "fixtures"


def resolve_input(name) -> Path:
    p = Path(name)
    if p.exists():
        return p
    env = os.environ.get("DTL_FIXTURES")
    candidates = []
    if env:
        candidates.append(Path(env) / p.name)
        candidates.append(Path(env) / name)
    candidates.append(BUNDLED_FIXTURES / p.name)
    for c in candidates:
        if c.exists():
            return c
    raise FileNotFoundError(f"no input file {name!r} (searched DTL_FIXTURES and bundled fixtures)")


def _load(args) -> FactorizedPotential:
    pot = load_potential(resolve_input(args.input))
    if args.mode == "float" and pot.exact:
        pot = FactorizedPotential(
            [RankOneTerm(t.sign, t.vector.as_float()) for t in pot.terms])
    elif args.mode == "exact" and not pot.exact:
        raise ValueError("exact mode requested but the input potential is not exact")
    return pot


def _parse_sites(spec):
    if ".." in spec:
        lo, hi = spec.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",")]


def _emit(args, payload, text_summary=None):
    if args.format == "text" and text_summary is not None:
        print(text_summary)
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))


def _classify_text(report):
    dims = report.dims
    return (f"threshold {report.threshold}: {report.threshold_type} "
            f"(stage {report.stage}, case {report.case_label}); "
            f"d0={dims['d0']} d={dims['d']} dtilde={dims['dtilde']} dqs={dims['dqs']}")


def cmd_classify(args):
    pot = _load(args)
    report = classify(pot)
    payload = report.to_json()
    payload["potential"] = pot.to_json()
    _emit(args, payload, _classify_text(report))
    return 0


def cmd_eigenbasis(args):
    pot = _load(args)
    report = classify(pot)
    payload = {"bases": report.to_json()["bases"], "exact": report.exact}
    lines = [f"{name}: {len(seqs)} vector(s)" for name, seqs in sorted(report.bases.items())]
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_expand(args):
    pot = _load(args)
    result = expand(pot, args.order)
    _emit(args, result.to_json(),
          f"case {result.case_id}, orders {result.j_min}..{result.order}")
    return 0


def cmd_verify(args):
    pot = _load(args)
    result = expand(pot, max(args.order, 0))
    sites = _parse_sites(args.sites)
    slope = remainder_slope(pot, result, args.order, sites,
                            kappa_base=Fraction(args.kappa_base), steps=args.kappa_steps)
    green = green_identity_check(pot, result, sites=range(-6, 7))
    payload = {"slopes": slope.to_json(), "green_identity": green}
    ok = slope.passed and green["passed"]
    if pot.exact:
        minv = invert_laurent(build_m_coefficients(pot, args.order + 7).series())
        window = range(-4, 5)
        agree = all(
            result.coeff(j).matrix_element(a, b)
            == composition_matrix_element(pot, minv, j, a, b)
            for j in range(result.j_min, args.order + 1)
            for a in window for b in window)
        payload["dual_path_agreement"] = agree
        ok = ok and agree
    payload["passed"] = ok
    _emit(args, payload, f"verify: {'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_threshold4(args):
    pot = _load(args)
    report = threshold4_analysis(pot)
    payload = report.to_json()
    _emit(args, payload, _classify_text(report))
    return 0


def cmd_kernel(args):
    sites = _parse_sites(args.sites)
    table = {
        f"order_{j}": {str(n): format_scalar(g0_kernel(j, n)) for n in sites}
        for j in range(-1, args.order + 1)
    }
    lines = []
    for j in range(-1, args.order + 1):
        row = "  ".join(str(g0_kernel(j, n)) for n in sites)
        lines.append(f"order {j}: {row}")
    _emit(args, table, "\n".join(lines))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dtl",
        description="Threshold classification and resolvent expansion for "
                    "one-dimensional lattice Schroedinger operators.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("input", help="potential file (JSON/TOML) or bundled fixture name")
            p.add_argument("--mode", choices=["exact", "float"], default=None,
                           help="force the arithmetic mode")
        p.add_argument("--format", choices=["json", "text"], default="json")

    p = sub.add_parser("classify", help="threshold type, case and dimensions")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eigenbasis", help="eigenfunction/resonance bases")
    common(p)
    p.set_defaults(func=cmd_eigenbasis)

    p = sub.add_parser("expand", help="Laurent coefficients of the resolvent")
    common(p)
    p.add_argument("--order", type=int, default=None)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("verify", help="remainder slopes, Green identity, dual-path check")
    common(p)
    p.add_argument("--order", type=int, default=0)
    p.add_argument("--kappa-base", default="1/16")
    p.add_argument("--kappa-steps", type=int, default=11)
    p.add_argument("--sites", default="-3,0,4",
                   help="comma list or a..b range (use --sites=-3..4 for "
                        "values starting with a dash); for float-mode "
                        "potentials, sites on an eigenfunction support are "
                        "limited by the input's binary64 eigenvalue uncertainty")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("threshold4", help="classification at the upper threshold")
    common(p)
    p.set_defaults(func=cmd_threshold4)

    p = sub.add_parser("kernel", help="expansion kernel table")
    common(p, needs_input=False)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--sites", default="0..10")
    p.set_defaults(func=cmd_kernel)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FloatingAmbiguous as exc:
        print(f"ambiguous in float mode: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
