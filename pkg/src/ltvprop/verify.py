"""Invariant suite behind ``ltvprop verify`` and ``selftest``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coeff import CoeffMatrix, block
from .dense import mat_det, mat_norm_max
from .oracle import OracleConfig, compare, rk4_linear, rk4_riccati
from .series import Grid, PropagatorTable, SeriesConfig, compute_E, compute_F, cumulative_integral, propagator_residual
from .solvers import (
    LinearIvp,
    RiccatiBlowUpError,
    RiccatiProblem,
    SylvesterIvp,
    riccati_from_particular,
    solve_linear_ivp,
    solve_riccati_block_E,
    solve_riccati_block_F,
    solve_sylvester,
)

IDENTITY_TOL = 1e-8
RESIDUAL_TOL = 1e-4
EQUIVALENCE_TOL = 1e-8
PARTICULAR_TOL = 1e-7
ORACLE_TOL = 1e-6
ORACLE_MARGIN = 0.1

_PROPAGATOR_CHECKS = ("base-identity", "det-identity", "inverse-identity", "derivative-residual", "truncation-honesty")

REQUIRED = {
    "propagator": [f"{c}[X]" for c in _PROPAGATOR_CHECKS],
    "linear": ["base-exact", "solution-residual"] + [f"{c}[A]" for c in _PROPAGATOR_CHECKS],
    "sylvester": ["base-exact", "solution-residual"] + [f"{c}[{s}]" for s in ("A", "B") for c in _PROPAGATOR_CHECKS],
    "riccati": [
        "base-exact",
        "form-equivalence",
        "bilinear-invariant",
        "particular-composition",
        "blow-up-consistency",
    ]
    + [f"{c}[block]" for c in _PROPAGATOR_CHECKS],
}
REQUIRED["nth-order"] = REQUIRED["linear"]
REQUIRED["riccati-particular"] = REQUIRED["riccati"]
REQUIRED["scalar-riccati"] = REQUIRED["riccati"]

ORACLE_REQUIRED = {"propagator": ["oracle-agreement"], "sylvester": []}


def required_invariants(kind: str, oracle: bool) -> list[str]:
    names = list(REQUIRED[kind])
    if oracle:
        names += ORACLE_REQUIRED.get(kind, ["oracle-agreement", "oracle-blow-up"] if "riccati" in kind else ["oracle-agreement"])
    return names


@dataclass
class Check:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.residual) and self.residual <= self.tol

    def line(self) -> str:
        return f"INVARIANT {self.name} residual={self.residual:.6e} tol={self.tol:.1e} {'PASS' if self.passed else 'FAIL'}"


@dataclass
class Report:
    kind: str
    required: list[str]
    checks: list[Check] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    seconds: float = 0.0

    def add(self, name: str, residual: float, tol: float) -> None:
        self.checks.append(Check(name, float(residual), tol))

    def missing(self) -> list[str]:
        present = {c.name for c in self.checks}
        return [name for name in self.required if name not in present]

    @property
    def passed(self) -> bool:
        return not self.missing() and all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = [c.line() for c in self.checks]
        out += [f"INVARIANT {name} residual=nan tol=nan FAIL (not run)" for name in self.missing()]
        out += [f"META {k} {v}" for k, v in self.meta.items()]
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, dict):
        return " ".join(f"{k}={_fmt(x)}" for k, x in v.items())
    return str(v)


def check_propagators(report: Report, X, grid: Grid, cfg: SeriesConfig, label: str) -> tuple[PropagatorTable, PropagatorTable]:
    """Identity, determinant, inverse, residual and truncation checks for E[X], F[X]."""
    E = compute_E(X, grid, cfg)
    F = compute_F(X, grid, cfg)
    Em = compute_E(-X if isinstance(X, CoeffMatrix) else -np.asarray(X), grid, cfg)
    n = E.values.shape[1]
    eye = np.eye(n)

    base = max(mat_norm_max(E.values[0] - eye), mat_norm_max(F.values[0] - eye))
    report.add(f"base-identity[{label}]", base, 0.0)

    samples = X.sample(grid.nodes) if isinstance(X, CoeffMatrix) else np.asarray(X)
    trace = cumulative_integral(np.trace(samples, axis1=1, axis2=2)[:, None, None], grid)[:, 0, 0]
    expected = np.exp(trace)
    det_err = 0.0
    for table in (E, F):
        dets = np.array([mat_det(v) for v in table.values])
        det_err = max(det_err, float(np.max(np.abs(dets - expected) / expected)))
    report.add(f"det-identity[{label}]", det_err, IDENTITY_TOL)

    inv = max(mat_norm_max(F.values @ Em.values - eye), mat_norm_max(Em.values @ F.values - eye))
    report.add(f"inverse-identity[{label}]", inv, IDENTITY_TOL)

    res = max(propagator_residual(E, X, grid), propagator_residual(F, X, grid))
    report.add(f"derivative-residual[{label}]", res, RESIDUAL_TOL)

    # slack >= 0 passes; reported as last_term_norm - tail_bound against tol 0
    honesty = max(E.last_term_norm - E.tail_bound, F.last_term_norm - F.tail_bound)
    report.add(f"truncation-honesty[{label}]", max(honesty, 0.0), 0.0)

    report.meta[f"terms_used[{label}]"] = f"E={E.terms_used} F={F.terms_used}"
    report.meta[f"tail_bound[{label}]"] = _fmt(max(E.tail_bound, F.tail_bound))
    report.meta[f"last_term_norm[{label}]"] = _fmt(max(E.last_term_norm, F.last_term_norm))
    return E, F


def _oracle_propagator(report: Report, X: CoeffMatrix, grid: Grid, E: PropagatorTable, ocfg: OracleConfig) -> None:
    n = X.rows
    worst = 0.0
    for j in range(n):
        col = np.zeros((n, 1))
        col[j] = 1.0
        sol = rk4_linear(LinearIvp(X, CoeffMatrix.zeros(n, 1, X.domain), col, grid), ocfg)
        worst = max(worst, mat_norm_max(sol.values[:, :, 0] - E.values[:, :, j]))
    report.add("oracle-agreement", worst, ORACLE_TOL)


def verify_propagator(X: CoeffMatrix, grid: Grid, cfg: SeriesConfig, oracle: bool, ocfg: OracleConfig, kind="propagator") -> Report:
    report = Report(kind, required_invariants(kind, oracle))
    E, _ = check_propagators(report, X, grid, cfg, "X")
    if oracle:
        _oracle_propagator(report, X, grid, E, ocfg)
    return report


def verify_linear(p: LinearIvp, cfg: SeriesConfig, oracle: bool, ocfg: OracleConfig, kind="linear") -> Report:
    report = Report(kind, required_invariants(kind, oracle))
    sol = solve_linear_ivp(p, cfg)
    report.add("base-exact", mat_norm_max(sol.values[0] - p.C), 0.0)
    report.add("solution-residual", sol.residual, RESIDUAL_TOL)
    check_propagators(report, p.A, p.grid, cfg, "A")
    if oracle:
        report.add("oracle-agreement", compare(sol, rk4_linear(p, ocfg)), ORACLE_TOL)
    return report


def verify_sylvester(p: SylvesterIvp, cfg: SeriesConfig, oracle: bool, ocfg: OracleConfig, kind="sylvester") -> Report:
    report = Report(kind, required_invariants(kind, oracle))
    sol = solve_sylvester(p, cfg)
    report.add("base-exact", mat_norm_max(sol.values[0] - p.U0), 0.0)
    report.add("solution-residual", sol.residual, RESIDUAL_TOL)
    check_propagators(report, p.A, p.grid, cfg, "A")
    check_propagators(report, p.B, p.grid, cfg, "B")
    return report


def verify_riccati(p: RiccatiProblem, cfg: SeriesConfig, oracle: bool, ocfg: OracleConfig, kind="riccati") -> Report:
    report = Report(kind, required_invariants(kind, oracle))
    e_sol, factors = solve_riccati_block_E(p, cfg)
    f_sol = solve_riccati_block_F(p, cfg)
    report.add("base-exact", max(mat_norm_max(e_sol.values[0] - p.W0), mat_norm_max(f_sol.values[0] - p.W0)), 0.0)
    # no fixed tolerance: differencing error scales with the third derivative and grows near poles
    report.meta["solution_residual"] = _fmt(max(e_sol.residual, f_sol.residual))
    report.add("form-equivalence", compare(e_sol, f_sol), EQUIVALENCE_TOL)
    U1, U2 = f_sol.factors["U1"], f_sol.factors["U2"]
    report.add("bilinear-invariant", mat_norm_max(U2 @ factors.W1 - U1 @ factors.W2), EQUIVALENCE_TOL)
    try:
        report.add("particular-composition", compare(riccati_from_particular(p, cfg), e_sol), PARTICULAR_TOL)
    except RiccatiBlowUpError as exc:
        report.add("particular-composition", math.inf, PARTICULAR_TOL)
        report.meta["particular_Y_blow_up_x"] = _fmt(exc.x)
    report.add("blow-up-consistency", _node_gap(e_sol.blow_up_node, f_sol.blow_up_node), 1.0)
    check_propagators(report, block([[p.A, p.Q], [p.P, p.B]]), p.grid, cfg, "block")

    if oracle:
        o = rk4_riccati(p, ocfg)
        first = [s.blow_up_x for s in (e_sol, f_sol, o) if s.blow_up_x is not None]
        x_max = min(first) - ORACLE_MARGIN if first else None
        report.add("oracle-agreement", max(compare(e_sol, o, x_max), compare(f_sol, o, x_max)), ORACLE_TOL)
        report.add("oracle-blow-up", _node_gap(e_sol.blow_up_node, o.blow_up_node), 1.0)

    report.meta["terms_used"] = _fmt(e_sol.terms_used | f_sol.terms_used)
    report.meta["blow_up_x"] = _fmt(e_sol.blow_up_x)
    return report


def _node_gap(a: int | None, b: int | None) -> float:
    if a is None and b is None:
        return 0.0
    if a is None or b is None:
        return math.inf
    return float(abs(a - b))


def verify(kind: str, obj, grid: Grid, cfg: SeriesConfig, oracle: bool = False, ocfg: OracleConfig | None = None) -> Report:
    """Run the invariant suite for a built problem object of the given kind."""
    ocfg = ocfg or OracleConfig()
    if kind == "propagator":
        return verify_propagator(obj, grid, cfg, oracle, ocfg)
    if kind in ("linear", "nth-order"):
        return verify_linear(obj, cfg, oracle, ocfg, kind)
    if kind == "sylvester":
        return verify_sylvester(obj, cfg, oracle, ocfg, kind)
    return verify_riccati(obj, cfg, oracle, ocfg, kind)
