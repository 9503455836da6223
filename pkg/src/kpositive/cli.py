"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 certification failure, 3 numerical blow-up.
The default zero threshold can be overridden with ``KPOSITIVE_ZERO_EPS``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as kio
from .certify import STRONG_CANDIDATE, certify_system
from .compound import ComplexityError, add_compound, index_sets, mult_compound
from .dynamics import BlowUpError, classify_omega_limit, signvar_trace, simulate
from .signvar import ZERO_EPS, classify_cone, enumerate_cones
from .systems import PRESETS

EXIT_OK, EXIT_INPUT, EXIT_FAIL, EXIT_BLOWUP = 0, 1, 2, 3


def default_eps() -> float:
    raw = os.environ.get("KPOSITIVE_ZERO_EPS")
    if raw is None:
        return ZERO_EPS
    try:
        eps = float(raw)
    except ValueError:
        raise kio.InputError(f"KPOSITIVE_ZERO_EPS is not a number: {raw!r}") from None
    if not eps >= 0:
        raise kio.InputError("KPOSITIVE_ZERO_EPS must be nonnegative")
    return eps


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _vector_arg(text: str) -> np.ndarray:
    if Path(text).is_file():
        return kio.load_vector(text)
    try:
        return np.array([float(t) for t in text.replace(" ", "").split(",") if t], dtype=float)
    except ValueError:
        raise kio.InputError(f"cannot parse vector {text!r}") from None


def cmd_certify(args, out) -> int:
    eps = args.eps if args.eps is not None else default_eps()
    if args.samples:
        A = kio.load_samples(args.samples)
    elif args.matrix:
        A = kio.load_matrix(args.matrix)
    else:
        raise kio.InputError("give a matrix file or --samples")
    report = certify_system(A, eps=eps)
    n = report.n
    if args.k == "all":
        ks = list(range(1, n + 1))
    else:
        try:
            ks = [int(args.k)]
        except ValueError:
            raise kio.InputError(f"--k must be an integer or 'all', got {args.k!r}") from None
        if not 1 <= ks[0] <= n:
            raise kio.InputError(f"--k must lie in [1, {n}]")
    if args.json:
        out.write(json.dumps(report.to_dict(), indent=2) + "\n")
    else:
        for k in ks:
            if report.k_positive(k):
                extra = " (strong candidate)" if report.verdicts[k] == STRONG_CANDIDATE else ""
                out.write(f"{k}-positive: yes{extra}\n")
            else:
                w = report.witnesses[k]
                out.write(f"{k}-positive: no (witness a{w['row']}{w['col']}={w['value']:g})\n")
    return EXIT_OK if all(report.k_positive(k) for k in ks) else EXIT_FAIL


def cmd_compound(args, out) -> int:
    A = kio.load_matrix(args.matrix)
    n = A.shape[0]
    if not 1 <= args.k <= n:
        raise kio.InputError(f"--k must lie in [1, {n}]")
    C = add_compound(A, args.k) if args.kind == "add" else mult_compound(A, args.k)
    sets = index_sets(n, args.k)
    out.write(kio.labeled_matrix_csv(C, sets, sets))
    return EXIT_OK


def _system_and_setup(args):
    """Resolve (system, x0, t1, step) from --preset or a spec file plus flags."""
    if args.preset:
        factory, x0, t1, step = PRESETS[args.preset]
        system = factory()
    elif args.spec:
        system = kio.load_system(args.spec)
        x0, t1, step = None, None, 0.01
    else:
        raise kio.InputError("give a system spec file or --preset")
    if args.x0 is not None:
        x0 = _vector_arg(args.x0)
    if args.t1 is not None:
        t1 = args.t1
    if args.step is not None:
        step = args.step
    if x0 is None or t1 is None:
        raise kio.InputError("--x0 and --t1 are required for a spec file")
    if len(x0) != system.n:
        raise kio.InputError(f"--x0 has length {len(x0)}, system has dimension {system.n}")
    return system, np.asarray(x0, dtype=float), float(t1), float(step)


def cmd_simulate(args, out) -> int:
    eps = args.eps if args.eps is not None else default_eps()
    system, x0, t1, step = _system_and_setup(args)
    traj = simulate(system, x0, 0.0, t1, step)
    trace = signvar_trace(traj, eps) if args.trace else None
    text = kio.trajectory_csv(traj, trace)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


def cmd_classify(args, out) -> int:
    eps = args.eps if args.eps is not None else default_eps()
    system = None
    if args.trajectory:
        traj = kio.load_trajectory(args.trajectory)
    else:
        system, x0, t1, step = _system_and_setup(args)
        traj = simulate(system, x0, 0.0, t1, step)
    verdict = classify_omega_limit(
        traj, system, eq_tol=args.eq_tol, orbit_tol=args.orbit_tol, discard=args.discard, eps=eps
    )
    out.write(json.dumps(verdict.to_dict(), indent=2, default=float) + "\n")
    return EXIT_OK


def cmd_decompose(args, out) -> int:
    eps = args.eps if args.eps is not None else default_eps()
    if args.n is not None or args.k is not None:
        if args.n is None or args.k is None:
            raise kio.InputError("--n and --k go together")
        if not 1 <= args.k <= args.n:
            raise kio.InputError("need 1 <= k <= n")
        for v in enumerate_cones(args.n, args.k):
            out.write("(" + ",".join(str(b) for b in v) + ")\n")
        return EXIT_OK
    if args.vector is None:
        raise kio.InputError("give a vector (file or comma list) or --n/--k")
    lab = classify_cone(_vector_arg(args.vector), eps)
    out.write(("zero" if lab is None else str(lab)) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kpositive", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--eps", type=float, default=None, help="zero threshold for sign decisions")

    c = sub.add_parser("certify", help="per-k positivity verdicts for a system matrix")
    c.add_argument("matrix", nargs="?")
    c.add_argument("--k", default="all", help="an integer or 'all'")
    c.add_argument("--samples", help="JSON list of matrix samples A(t_i)")
    c.add_argument("--json", action="store_true", help="print the full report as JSON")
    common(c)
    c.set_defaults(func=cmd_certify)

    c = sub.add_parser("compound", help="multiplicative or additive compound with index labels")
    c.add_argument("matrix")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--kind", choices=["mult", "add"], default="mult")
    c.set_defaults(func=cmd_compound)

    for name, func, help_ in (
        ("simulate", cmd_simulate, "RK4 trajectory as CSV"),
        ("classify", cmd_classify, "omega-limit verdict as JSON"),
    ):
        c = sub.add_parser(name, help=help_)
        if name == "classify":
            c.add_argument("trajectory", nargs="?", help="trajectory CSV (t, x1..xn)")
            c.add_argument("--eq-tol", type=_positive, default=1e-6)
            c.add_argument("--orbit-tol", type=_positive, default=1e-4)
            c.add_argument("--discard", type=float, default=0.5)
        c.add_argument("--spec", help="system spec file (JSON or CSV matrix)")
        c.add_argument("--preset", choices=sorted(PRESETS))
        c.add_argument("--x0", help="initial state: file or comma list (use --x0=-1,2 for a leading minus)")
        c.add_argument("--t1", type=_positive)
        c.add_argument("--step", type=_positive)
        if name == "simulate":
            c.add_argument("--trace", action="store_true", help="append s_minus, s_plus, cone columns")
            c.add_argument("--out", help="write CSV here instead of stdout")
        common(c)
        c.set_defaults(func=func)

    c = sub.add_parser("decompose", help="cone label of a vector, or list breakpoint vectors")
    c.add_argument("vector", nargs="?", help="file or comma list")
    c.add_argument("--n", type=int)
    c.add_argument("--k", type=int)
    common(c)
    c.set_defaults(func=cmd_decompose)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for certification failure
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        return args.func(args, out)
    except (kio.InputError, ComplexityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BlowUpError as exc:
        print(f"error: {exc} (last finite time {exc.last_time:g})", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
