"""``qfi`` command-line interface.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 pathway
disagreement in ``compare``. Nothing is written when a run fails.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from .engine import qfi_sld, qfi_support, qfi_unitary
from .ensemble import (
    eigen_ensemble,
    eigen_ensemble_is_optimal,
    ensemble_average_variance,
    optimal_ensemble,
    random_ensembles,
    unitary_problem,
    y_observable,
)
from .errors import NumericalError, ValidationError
from .family import DEFAULT_STEP, eigen_derivatives
from .fock import mzi_demo
from .hermitian import DEFAULT_THRESHOLD
from .io import decode_family, dumps, encode_ensemble
from .matrix_repr import qfi_matrix

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_DISAGREE = 0, 2, 3, 4
COMPARE_RTOL = 1e-8

PATHWAYS = {
    "sld": lambda b: qfi_sld(b.decomp, b.drho),
    "support": qfi_support,
    "matrix": qfi_matrix,
}


def default_threshold():
    value = os.environ.get("QFI_THRESHOLD")
    if value is None:
        return DEFAULT_THRESHOLD
    try:
        return float(value)
    except ValueError:
        raise ValidationError(f"QFI_THRESHOLD={value!r} is not a number") from None


def _load(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _bundle(args):
    family = decode_family(_load(args.input))
    return eigen_derivatives(family, args.theta, h=args.step, threshold=args.threshold)


def cmd_compute(args):
    report = PATHWAYS[args.method](_bundle(args))
    return report.to_dict(), EXIT_OK


def cmd_compare(args):
    bundle = _bundle(args)
    reports, timings = {}, {}
    for name, run in PATHWAYS.items():
        start = time.perf_counter()
        reports[name] = run(bundle)
        timings[name] = time.perf_counter() - start
    values = [r.F for r in reports.values()]
    spread = max(values) - min(values)
    scale = max(1.0, max(abs(v) for v in values))
    agree = spread <= COMPARE_RTOL * scale
    out = {
        "reports": {k: r.to_dict() for k, r in reports.items()},
        "max_abs_difference": spread,
        "tolerance": COMPARE_RTOL * scale,
        "agree": agree,
    }
    if args.timing:
        out["timing_seconds"] = timings
    return out, EXIT_OK if agree else EXIT_DISAGREE


def cmd_ensemble(args):
    family = decode_family(_load(args.input))
    decomp, h = unitary_problem(family, args.theta, args.threshold)
    report = qfi_unitary(decomp, h)
    optimal, witness = eigen_ensemble_is_optimal(decomp, h, args.tol)
    y = y_observable(decomp, h)
    best = optimal_ensemble(decomp, h)
    size = args.size or 2 * decomp.support_dim
    samples = [
        ensemble_average_variance(e, h)
        for e in random_ensembles(decomp, args.seed, args.samples, size)
    ]
    out = {
        "F": report.F,
        "support_dim": decomp.support_dim,
        "eigen_ensemble_optimal": optimal,
        # 1-based indices, matching the usual bra-ket labelling
        "witness": None if witness is None else {
            "i": witness[0] + 1, "j": witness[1] + 1, "abs_H_ij": witness[2]
        },
        "eigen_ensemble_variance": ensemble_average_variance(eigen_ensemble(decomp), h),
        "y_spectrum": y.eigenvalues.tolist(),
        "optimal_ensemble": encode_ensemble(best),
        "optimal_ensemble_variance": ensemble_average_variance(best, h),
        "random_ensembles": {
            "count": len(samples),
            "size": size,
            "seed": args.seed,
            "min": min(samples) if samples else None,
            "mean": float(np.mean(samples)) if samples else None,
            "max": max(samples) if samples else None,
        },
        "diagnostics": list(report.diagnostics) + list(best.diagnostics),
    }
    return out, EXIT_OK


def cmd_demo_mzi(args):
    result = mzi_demo(args.photons, args.truncation, args.full_space, args.threshold)
    report = result.pop("report")
    result["report"] = report.to_dict()
    result["narrative"] = (
        f"Input |{args.photons}, 0> through H = (a^dag b - a b^dag)/(2i): "
        f"H maps it to (i sqrt(n)/2)|n-1, 1>, so F = 4 Var(H) = n = {args.photons}. "
        "The state is pure, so the eigen-ensemble is trivially optimal."
    )
    return result, EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="qfi", description="Quantum Fisher information toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, family_input=True):
        if family_input:
            p.add_argument("--input", required=True, help="family or (rho, drho) JSON file")
            p.add_argument("--theta", type=float, default=0.0)
            p.add_argument("--step", type=float, default=DEFAULT_STEP)
        p.add_argument("--threshold", type=float, default=None,
                       help="support threshold (default: $QFI_THRESHOLD or 1e-12)")
        p.add_argument("--output", help="write JSON here instead of standard output")

    p = sub.add_parser("compute", help="QFI by one pathway")
    common(p)
    p.add_argument("--method", choices=sorted(PATHWAYS), default="support")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("compare", help="run all pathways and check agreement")
    common(p)
    p.add_argument("--timing", action="store_true", help="include wall-clock timings")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ensemble", help="convex-roof analysis of a unitary family")
    common(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=None, help="members per random ensemble")
    p.add_argument("--tol", type=float, default=1e-9, help="optimality tolerance on |H_ij|")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("demo-mzi", help="Mach-Zehnder QFI of a Fock input |n, 0>")
    common(p, family_input=False)
    p.add_argument("--photons", type=int, required=True)
    p.add_argument("--truncation", type=int, required=True)
    p.add_argument("--full-space", action="store_true",
                   help="use the full truncated two-mode space instead of the photon-number sector")
    p.set_defaults(func=cmd_demo_mzi)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.threshold is None:
            args.threshold = default_threshold()
        payload, code = args.func(args)
    except ValidationError as exc:
        print(f"qfi: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"qfi: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = dumps(payload) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
