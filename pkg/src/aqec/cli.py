"""Command-line front end.

Inputs are JSON documents (see :mod:`aqec.io`) given as file paths or as
names from the bundled catalog. Exit codes: 0 success or verdict true,
1 verdict false, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile

import numpy as np

from . import io
from .algebras import full_algebra
from .channels import complement, compose, encoding_channel
from .correctability import (
    delta_estimate,
    exact_check,
    largest_correctable,
    optimal_error,
    subspace_estimate,
    verify_theorem1,
)
from .diamond import cb_check, diamond_distance
from .matcore import InputError
from .sdp import SolverError

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def sci(x: float) -> str:
    """One-digit mantissa with a compact exponent, e.g. ``8.7e-1`` or ``0.0e0``."""
    mant, exp = f"{x:.1e}".split("e")
    return f"{mant}e{int(exp)}"


def num(x: float) -> str:
    return f"{x:.6g}"


def _emit(args, text: str, doc: dict):
    if args.output == "json":
        print(io.dumps(doc))
    else:
        print(text)


def _one_channel(args):
    if not args.channel:
        raise InputError("--channel is required")
    if len(args.channel) != 1:
        raise InputError("exactly one --channel expected")
    return io.channel_from_doc(io.read_document(args.channel[0]))


def _channel_and_algebra(args):
    """Channel and algebra, with ``--code`` folded into the channel."""
    N = _one_channel(args)
    if args.code:
        if args.algebra:
            raise InputError("give either --algebra or --code, not both")
        code = io.code_from_doc(io.read_document(args.code))
        if code.physical_dim != N.dim_in:
            raise InputError(
                f"code lives in dimension {code.physical_dim} but the channel input has dimension {N.dim_in}"
            )
        return compose(N, encoding_channel(code.V)), full_algebra(code.d), code, N
    if not args.algebra:
        raise InputError("--algebra or --code is required")
    alg = io.algebra_from_doc(io.read_document(args.algebra), seed=args.seed)
    if alg.ambient_dim != N.dim_in:
        raise InputError(
            f"algebra acts on dimension {alg.ambient_dim} but the channel input has dimension {N.dim_in}"
        )
    return N, alg, None, N


def cmd_check_exact(args) -> int:
    N, alg, _, _ = _channel_and_algebra(args)
    exact, defect = exact_check(N, alg, args.tol)
    verdict = "EXACT" if exact else "NOT EXACT"
    _emit(args, f"{verdict} (defect {sci(defect)})", {"exact": exact, "kl_defect": defect, "tol": args.tol})
    return EXIT_OK if exact else EXIT_FALSE


def cmd_delta(args) -> int:
    N, alg, code, raw = _channel_and_algebra(args)
    delta = subspace_estimate(code, raw) if code is not None else delta_estimate(N, alg)
    _emit(args, f"δ={num(delta)}", {"delta": delta})
    return EXIT_OK


def cmd_optimal(args) -> int:
    N, alg, _, _ = _channel_and_algebra(args)
    E, R = optimal_error(N, alg)
    _emit(args, f"E={num(E)} (recovery with {R.num_kraus} Kraus operators)", {"optimal_error": E, "recovery": io.channel_to_doc(R)})
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    N, alg, _, _ = _channel_and_algebra(args)
    rep = verify_theorem1(N, alg, tol=args.tol)
    rep.seed = args.seed
    verdict = "BOUNDS OK" if rep.bounds_ok else "BOUNDS VIOLATED"
    text = (
        f"δ={rep.delta:.3f} E={rep.optimal_error:.3f} {verdict}\n"
        f"  delta          {num(rep.delta):>12}\n"
        f"  optimal error  {num(rep.optimal_error):>12}\n"
        f"  lower δ²/4     {num(rep.lower_bound):>12}\n"
        f"  upper 2√δ      {num(rep.upper_bound):>12}\n"
        f"  kl defect      {sci(rep.kl_defect):>12}"
    )
    _emit(args, text, io.report_to_doc(rep))
    return EXIT_OK if rep.bounds_ok else EXIT_FALSE


def cmd_largest_algebra(args) -> int:
    N = _one_channel(args)
    alg = largest_correctable(N, seed=args.seed)
    shape = " ".join(f"({a},{b})" for a, b in alg.shape)
    print(f"largest correctable algebra: dim {alg.dim}, blocks (dA,dB) {shape}", file=sys.stderr)
    print(io.dumps(io.algebra_to_doc(alg)))
    return EXIT_OK


def cmd_complement(args) -> int:
    N = _one_channel(args)
    print(io.dumps(io.channel_to_doc(complement(N))))
    return EXIT_OK


def cmd_diamond(args) -> int:
    if not args.channel or len(args.channel) != 2:
        raise InputError("diamond needs exactly two --channel arguments")
    N1, N2 = (io.channel_from_doc(io.read_document(c)) for c in args.channel)
    dist = diamond_distance(N1, N2)
    lower = cb_check(N1, N2, samples=args.samples, seed=args.seed)
    text = f"diamond distance {num(dist)}\n  sampled lower bound {num(lower)}"
    _emit(args, text, {"diamond_distance": dist, "sampled_lower_bound": lower})
    return EXIT_OK


COMMANDS = {
    "check-exact": (cmd_check_exact, "commutator test for exact correctability"),
    "delta": (cmd_delta, "correctability estimate from the complementary channel"),
    "optimal": (cmd_optimal, "optimal reconstruction error and recovery channel"),
    "verify-bounds": (cmd_verify_bounds, "check delta^2/4 <= E <= 2 sqrt(delta)"),
    "largest-algebra": (cmd_largest_algebra, "largest exactly correctable algebra"),
    "complement": (cmd_complement, "complementary channel as a channel document"),
    "diamond": (cmd_diamond, "diamond distance between two channels"),
}


def _positive(kind):
    def parse(s):
        v = kind(s)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--channel", action="append", help="channel document (path or catalog name)")
        p.add_argument("--algebra", help="algebra document")
        p.add_argument("--code", help="code document (full algebra on the code space)")
        p.add_argument("--tol", type=_positive(float), default=1e-6)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=_positive(int), default=1000)
        p.add_argument("--output", choices=("text", "json"), default="text")
    return parser


def _write_trace(trace: list[dict]) -> str:
    fd, path = tempfile.mkstemp(prefix="aqec-trace-", suffix=".json")
    with os.fdopen(fd, "w") as fh:
        json.dump([{k: float(v) for k, v in r.items()} for r in trace], fh, indent=1)
    return path


def main(argv: list[str] | None = None) -> int:
    if os.environ.get("AQEC_VERBOSE") == "1":
        logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    func = COMMANDS[args.command][0]
    try:
        return func(args)
    except SolverError as exc:
        where = _write_trace(exc.trace) if exc.trace else "none recorded"
        print(f"error: {exc} (solver trace: {where})", file=sys.stderr)
        return EXIT_NUMERIC
    except (np.linalg.LinAlgError, ArithmeticError, RuntimeError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError, TypeError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
