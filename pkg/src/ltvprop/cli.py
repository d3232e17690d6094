"""``ltvprop`` command-line front end.

Exit status: 0 success, 1 usage/parse/IO error, 2 solver error, 3 failed
verification.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .coeff import block
from .expr import ExprSyntaxError
from .output import render_propagator, render_solution, write_text
from .oracle import DivergenceError, compare, rk4_linear, rk4_riccati
from .problem import ProblemError, ProblemFile, build, grid_of, load_problem, series_config_of
from .series import InternalConsistencyError, TruncationError, compute_E, compute_F
from .solvers import (
    RiccatiBlowUpError,
    RiccatiProblem,
    riccati_from_particular,
    solve_linear_ivp,
    solve_riccati_block_E,
    solve_sylvester,
)
from .verify import Report, verify

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3

SOLVER_ERRORS = (ArithmeticError, TruncationError, InternalConsistencyError, RiccatiBlowUpError, DivergenceError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ltvprop", description="Series propagators for linear time-varying and Riccati ODEs.")
    p.add_argument("--version", action="version", version=f"ltvprop {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (
        ("solve", "solve the problem and write the solution table"),
        ("propagator", "write the E and F propagator tables"),
        ("verify", "run the invariant suite and write a report"),
        ("selftest", "run the built-in example corpus"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("problem", nargs="?" if name == "selftest" else None, help="problem file (JSON)")
        s.add_argument("--out", help="output path (default: standard output)")
        s.add_argument("--grid", type=int, metavar="N", help="override n_intervals")
        s.add_argument("--max-terms", type=int, metavar="K", help="override series.max_terms")
        s.add_argument("--tol", type=float, metavar="T", help="override series.term_tol")
        s.add_argument("--oracle", action="store_true", help="also compare against the RK4 oracle")
    return p


def _load(args) -> ProblemFile:
    try:
        with open(args.problem, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"ltvprop: cannot read {args.problem}: {exc.strerror}") from None
    pf = load_problem(text)
    data = pf.model_dump(exclude_none=True)
    if args.grid is not None:
        data["n_intervals"] = args.grid
    series = data.setdefault("series", {})
    if args.max_terms is not None:
        series["max_terms"] = args.max_terms
    if args.tol is not None:
        series["term_tol"] = args.tol
    if args.oracle:
        data["oracle"] = True
    return load_problem(json.dumps(data))


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        write_text(text, out)


def _propagator_matrix(pf: ProblemFile, obj):
    if pf.kind == "propagator":
        return obj
    if pf.kind in ("linear", "nth-order"):
        return obj.A
    if isinstance(obj, RiccatiProblem):
        return block([[obj.A, obj.Q], [obj.P, obj.B]])
    raise UsageError(f"no single propagator for kind {pf.kind!r}")


def cmd_solve(args) -> int:
    pf = _load(args)
    obj, grid, cfg = build(pf), grid_of(pf), series_config_of(pf)
    if pf.kind == "propagator":
        _emit(render_propagator(compute_E(obj, grid, cfg)), args.out)
        return EXIT_OK
    if pf.kind in ("linear", "nth-order"):
        sol = solve_linear_ivp(obj, cfg)
        reference = rk4_linear if pf.oracle else None
    elif pf.kind == "sylvester":
        sol, reference = solve_sylvester(obj, cfg), None
    elif pf.kind == "riccati-particular":
        sol, reference = riccati_from_particular(obj, cfg), rk4_riccati if pf.oracle else None
    else:
        sol, _ = solve_riccati_block_E(obj, cfg)
        reference = rk4_riccati if pf.oracle else None
    _emit(render_solution(sol), args.out)
    if sol.blow_up_x is not None:
        print(f"ltvprop: solution blows up near x={sol.blow_up_x!r}", file=sys.stderr)
    if reference is not None:
        o = reference(obj)
        print(f"ltvprop: oracle disagreement {compare(sol, o):.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_propagator(args) -> int:
    pf = _load(args)
    X = _propagator_matrix(pf, build(pf))
    grid, cfg = grid_of(pf), series_config_of(pf)
    E, F = compute_E(X, grid, cfg), compute_F(X, grid, cfg)
    if args.out is None:
        sys.stdout.write("# E\n" + render_propagator(E) + "# F\n" + render_propagator(F))
    else:
        stem = args.out[:-4] if args.out.endswith(".csv") else args.out
        write_text(render_propagator(E), f"{stem}.E.csv")
        write_text(render_propagator(F), f"{stem}.F.csv")
    return EXIT_OK


def _run_report(pf: ProblemFile) -> Report:
    start = time.perf_counter()
    report = verify(pf.kind, build(pf), grid_of(pf), series_config_of(pf), oracle=pf.oracle)
    report.seconds = time.perf_counter() - start
    return report


def cmd_verify(args) -> int:
    report = _run_report(_load(args))
    _emit(report.text(), args.out)
    # timing stays off stdout so reports are byte-reproducible
    print(f"ltvprop: verify took {report.seconds:.3f} s", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERIFY


# Built-in corpus: (name, problem document, (closed-form error fn, tol) or None).
SELFTEST_CORPUS = [
    (
        "scalar-riccati-decay",
        {
            "kind": "riccati",
            "dimensions": {"n": 1, "m": 1},
            "coefficients": {"A": [["0"]], "B": [["0"]], "P": [["1"]], "Q": [["0"]]},
            "initial": [[1.0]],
            "interval": [0.0, 1.0],
            "n_intervals": 200,
            "oracle": True,
        },
        (lambda x, v: v[:, 0, 0] - 1.0 / (1.0 + x), 1e-9),
    ),
    (
        "harmonic-oscillator",
        {
            "kind": "nth-order",
            "dimensions": {"n": 2},
            "coefficients": {"a": ["0", "1"]},
            "initial": [0.0, 1.0],
            "interval": [0.0, 1.0],
            "n_intervals": 200,
            "oracle": True,
        },
        (lambda x, v: v[:, 1, 0] - np.cos(x), 1e-8),
    ),
    (
        "nilpotent-propagator",
        {
            "kind": "propagator",
            "dimensions": {"n": 2},
            "coefficients": {"X": [["0", "x"], ["0", "0"]]},
            "interval": [0.0, 1.0],
            "n_intervals": 200,
            "oracle": True,
        },
        (lambda x, v: np.max(np.abs(v - np.array([[[1.0, t * t / 2], [0.0, 1.0]] for t in x])), axis=(1, 2)), 1e-12),
    ),
    (
        "tangent-riccati",
        {
            "kind": "scalar-riccati",
            "dimensions": {"n": 1},
            "coefficients": {"a": "1", "b": "0", "c": "1"},
            "initial": 0.0,
            "interval": [0.0, 1.0],
            "n_intervals": 200,
        },
        (lambda x, v: v[:, 0, 0] + np.tan(x), 1e-6),
    ),
    (
        "blow-up-family",
        {
            "kind": "riccati",
            "dimensions": {"n": 1, "m": 1},
            "coefficients": {"A": [["0"]], "B": [["0"]], "P": [["-1"]], "Q": [["0"]]},
            "initial": [[1.0]],
            "interval": [0.0, 1.2],
            "n_intervals": 240,
            "oracle": True,
        },
        None,
    ),
]


def _closed_form_values(pf: ProblemFile):
    obj, grid, cfg = build(pf), grid_of(pf), series_config_of(pf)
    if pf.kind == "propagator":
        return grid.nodes, compute_E(obj, grid, cfg).values, None
    if pf.kind == "nth-order":
        sol = solve_linear_ivp(obj, cfg)
    else:
        sol, _ = solve_riccati_block_E(obj, cfg)
    return sol.nodes[: len(sol.values)], sol.values, sol


def run_selftest() -> tuple[str, bool]:
    """Run every corpus item; return the transcript and overall verdict."""
    lines, ok = [], True
    for name, doc, closed in SELFTEST_CORPUS:
        pf = ProblemFile.model_validate(doc)
        lines.append(f"CASE {name}")
        report = _run_report(pf)
        lines += report.lines()
        ok &= report.passed
        x, values, sol = _closed_form_values(pf)
        if closed is not None:
            fn, tol = closed
            err = float(np.max(np.abs(fn(x, values))))
            passed = err <= tol
            lines.append(f"CHECK closed-form error={err:.6e} tol={tol:.1e} {'PASS' if passed else 'FAIL'}")
        else:
            h = grid_of(pf).h
            gap = abs(sol.blow_up_x - 1.0) if sol.blow_up_x is not None else math.inf
            passed = gap <= h
            lines.append(f"CHECK blow-up-location distance={gap:.6e} tol={h:.1e} {'PASS' if passed else 'FAIL'}")
        ok &= passed
    lines.append(f"SELFTEST {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines) + "\n", ok


def cmd_selftest(args) -> int:
    start = time.perf_counter()
    text, ok = run_selftest()
    _emit(text, args.out)
    print(f"ltvprop: selftest took {time.perf_counter() - start:.3f} s", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {"solve": cmd_solve, "propagator": cmd_propagator, "verify": cmd_verify, "selftest": cmd_selftest}


def run(argv: list[str] | None = None) -> int:
    """Execute one command line and return its exit status."""
    try:
        args = _parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SOLVER_ERRORS as exc:
        print(f"ltvprop: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ExprSyntaxError as exc:
        print(f"ltvprop: in expression {exc.text!r}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ProblemError, ValueError) as exc:
        print(f"ltvprop: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ltvprop: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
