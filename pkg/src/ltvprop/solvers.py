"""Linear, Sylvester and Riccati initial value problems via E/F propagators.

Shapes follow the Riccati equation

    dW/dx + W P W + W B - A W - Q = 0,

with A n x n, B m x m, P m x n, Q n x m and W n x m.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coeff import CoeffMatrix, block
from .dense import SingularMatrixError, as_matrix, lu_factor, lu_solve, mat_norm_max
from .expr import Expr, Neg, Num
from .series import Grid, SeriesConfig, compute_E, compute_F, cumulative_integral, sample_on_grid

BLOW_UP_DET = 1e-10


class RiccatiBlowUpError(RuntimeError):
    """The particular solution Y escaped before the end of the grid."""

    def __init__(self, node: int, x: float):
        super().__init__(f"particular solution Y blows up at node {node} (x={x!r})")
        self.node = node
        self.x = x


@dataclass(frozen=True)
class LinearIvp:
    A: CoeffMatrix
    forcing: CoeffMatrix
    C: np.ndarray
    grid: Grid

    def __post_init__(self):
        n = self.A.rows
        if self.A.cols != n:
            raise ValueError(f"A must be square, got {self.A.rows}x{self.A.cols}")
        if self.forcing.shape != (n, 1):
            raise ValueError(f"forcing must be {n}x1, got {self.forcing.rows}x{self.forcing.cols}")
        object.__setattr__(self, "C", as_matrix(self.C))
        if self.C.shape != (n, 1):
            raise ValueError(f"C must be {n}x1, got {self.C.shape[0]}x{self.C.shape[1]}")


@dataclass(frozen=True)
class SylvesterIvp:
    A: CoeffMatrix
    B: CoeffMatrix
    P: CoeffMatrix
    U0: np.ndarray
    grid: Grid

    def __post_init__(self):
        n, m = self.A.rows, self.B.rows
        object.__setattr__(self, "U0", as_matrix(self.U0))
        expected = {"A": (n, n), "B": (m, m), "P": (n, m), "U0": (n, m)}
        actual = {"A": self.A.shape, "B": self.B.shape, "P": self.P.shape, "U0": self.U0.shape}
        _check_shapes(expected, actual)


@dataclass(frozen=True)
class RiccatiProblem:
    A: CoeffMatrix
    B: CoeffMatrix
    P: CoeffMatrix
    Q: CoeffMatrix
    W0: np.ndarray
    grid: Grid

    def __post_init__(self):
        n, m = self.A.rows, self.B.rows
        object.__setattr__(self, "W0", as_matrix(self.W0))
        expected = {"A": (n, n), "B": (m, m), "P": (m, n), "Q": (n, m), "W0": (n, m)}
        actual = {"A": self.A.shape, "B": self.B.shape, "P": self.P.shape, "Q": self.Q.shape, "W0": self.W0.shape}
        _check_shapes(expected, actual)

    @property
    def n(self) -> int:
        return self.A.rows

    @property
    def m(self) -> int:
        return self.B.rows


def _check_shapes(expected: dict, actual: dict) -> None:
    bad = [f"{k} is {actual[k][0]}x{actual[k][1]}, expected {v[0]}x{v[1]}" for k, v in expected.items() if actual[k] != v]
    if bad:
        raise ValueError("inconsistent shapes: " + "; ".join(bad))


@dataclass(frozen=True)
class RiccatiFactors:
    W1: np.ndarray
    W2: np.ndarray
    blow_up_node: int | None = None


@dataclass(frozen=True)
class Solution:
    """Per-node values on ``grid``; truncated before ``blow_up_node`` if set."""

    values: np.ndarray = field(repr=False)
    grid: Grid
    terms_used: dict = field(default_factory=dict)
    residual: float | None = None
    blow_up_node: int | None = None
    factors: dict | None = field(default=None, repr=False)
    divergence_x: float | None = None

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes[: len(self.values)]

    @property
    def blow_up_x(self) -> float | None:
        return None if self.blow_up_node is None else float(self.grid.nodes[self.blow_up_node])


def _solution(values, grid, initial, **meta) -> Solution:
    values = np.array(values, dtype=np.float64)
    values[0] = initial
    values.flags.writeable = False
    return Solution(values=values, grid=grid, **meta)


def _centered(values: np.ndarray, h: float) -> np.ndarray:
    return (values[2:] - values[:-2]) / (2.0 * h)


def _domain(grid: Grid) -> tuple[float, float]:
    return (grid.x_lo, grid.x_hi)


def companion_from_scalar(a: list[Expr], f: Expr, u0, grid: Grid) -> LinearIvp:
    """Companion-form system for u^(n) + a_1 u^(n-1) + ... + a_n u = f.

    ``u0`` lists u^(n-1)(x_lo), ..., u(x_lo); the last state component of the
    resulting system is u itself.
    """
    n = len(a)
    if n < 1:
        raise ValueError("need at least one coefficient")
    if len(u0) != n:
        raise ValueError(f"expected {n} initial values, got {len(u0)}")
    zero, one = Num(0.0), Num(1.0)
    rows = [tuple(Neg(ak) for ak in a)]
    for i in range(1, n):
        rows.append(tuple(one if j == i - 1 else zero for j in range(n)))
    domain = _domain(grid)
    forcing = CoeffMatrix(tuple((f,) if i == 0 else (zero,) for i in range(n)), domain)
    C = np.asarray(u0, dtype=np.float64).reshape(n, 1)
    return LinearIvp(CoeffMatrix(tuple(rows), domain), forcing, C, grid)


def solve_linear_ivp(p: LinearIvp, cfg: SeriesConfig | None = None) -> Solution:
    """U = E[A] (C + int F[-A] f ds) for dU/dx = A U + f, U(x_lo) = C."""
    cfg = cfg or SeriesConfig()
    g = p.grid
    E = compute_E(p.A, g, cfg)
    Fm = compute_F(-p.A, g, cfg)
    f = sample_on_grid(p.forcing, g)
    particular = cumulative_integral(Fm.values @ f, g)
    U = E.values @ (p.C + particular)

    A = sample_on_grid(p.A, g)
    residual = mat_norm_max(_centered(U, g.h) - (A[1:-1] @ U[1:-1] + f[1:-1]))
    return _solution(U, g, p.C, terms_used={"E[A]": E.terms_used, "F[-A]": Fm.terms_used}, residual=residual)


def solve_sylvester(p: SylvesterIvp, cfg: SeriesConfig | None = None) -> Solution:
    """U = E(A) [int F(-A) P E(-B) dt + U0] F(B) for dU/dx = A U + U B + P."""
    cfg = cfg or SeriesConfig()
    g = p.grid
    EA = compute_E(p.A, g, cfg)
    FmA = compute_F(-p.A, g, cfg)
    EmB = compute_E(-p.B, g, cfg)
    FB = compute_F(p.B, g, cfg)
    P = sample_on_grid(p.P, g)
    inner = cumulative_integral(FmA.values @ P @ EmB.values, g) + p.U0
    U = EA.values @ inner @ FB.values

    A = sample_on_grid(p.A, g)
    B = sample_on_grid(p.B, g)
    rhs = A[1:-1] @ U[1:-1] + U[1:-1] @ B[1:-1] + P[1:-1]
    residual = mat_norm_max(_centered(U, g.h) - rhs)
    terms = {"E[A]": EA.terms_used, "F[-A]": FmA.terms_used, "E[-B]": EmB.terms_used, "F[B]": FB.terms_used}
    return _solution(U, g, p.U0, terms_used=terms, residual=residual)


def _factor_unless_degenerate(m: np.ndarray):
    """LU factors of ``m``, or None once det m < 1e-10 or a pivot is singular.

    The determinant starts at 1, so a signed test also catches a sign change
    between nodes that never lands near zero on the grid.
    """
    try:
        lu, perm, sign = lu_factor(m)
    except SingularMatrixError:
        return None
    if sign * np.prod(np.diag(lu)) < BLOW_UP_DET:
        return None
    return lu, perm


def _right_quotients(num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, int | None]:
    """Node-wise num @ inv(den) up to the first node where den degenerates."""
    out = []
    for i in range(den.shape[0]):
        factors = _factor_unless_degenerate(den[i].T)
        if factors is None:
            return np.array(out), i
        out.append(lu_solve(*factors, num[i].T).T)
    return np.array(out), None


def _left_quotients(den: np.ndarray, num: np.ndarray) -> tuple[np.ndarray, int | None]:
    """Node-wise inv(den) @ num up to the first node where den degenerates."""
    out = []
    for i in range(den.shape[0]):
        factors = _factor_unless_degenerate(den[i])
        if factors is None:
            return np.array(out), i
        out.append(lu_solve(*factors, num[i]))
    return np.array(out), None


def riccati_residual(p: RiccatiProblem, W: np.ndarray) -> float:
    """Centered-difference defect of dW/dx + WPW + WB - AW - Q on interior nodes of ``W``."""
    k = W.shape[0]
    if k < 3:
        return 0.0
    nodes = p.grid.nodes[1 : k - 1]
    A, B, P, Q = (c.sample(nodes) for c in (p.A, p.B, p.P, p.Q))
    Wi = W[1:-1]
    lhs = _centered(W, p.grid.h) + Wi @ P @ Wi + Wi @ B - A @ Wi - Q
    return mat_norm_max(lhs)


def riccati_block_E_factors(p: RiccatiProblem, cfg: SeriesConfig | None = None):
    cfg = cfg or SeriesConfig()
    generator = block([[p.A, p.Q], [p.P, p.B]])
    E = compute_E(generator, p.grid, cfg)
    stack = np.vstack([p.W0, np.eye(p.m)])
    W12 = E.values @ stack
    return W12[:, : p.n], W12[:, p.n :], E


def solve_riccati_block_E(p: RiccatiProblem, cfg: SeriesConfig | None = None) -> tuple[Solution, RiccatiFactors]:
    """W = W1 inv(W2) with [W1; W2] = E([[A, Q], [P, B]]) [W0; I].

    Finite escape (|det W2| < 1e-10 or a singular pivot) ends the solution
    at the node before; it is reported through ``blow_up_node``, not raised.
    """
    W1, W2, E = riccati_block_E_factors(p, cfg)
    W, blow_up = _right_quotients(W1, W2)
    factors = RiccatiFactors(W1=W1, W2=W2, blow_up_node=blow_up)
    sol = _solution(
        W,
        p.grid,
        p.W0,
        terms_used={"E[[A,Q],[P,B]]": E.terms_used},
        residual=riccati_residual(p, W),
        blow_up_node=blow_up,
        factors={"W1": W1, "W2": W2},
    )
    return sol, factors


def riccati_block_F_factors(p: RiccatiProblem, cfg: SeriesConfig | None = None):
    cfg = cfg or SeriesConfig()
    generator = block([[-p.B, p.P], [p.Q, -p.A]])
    F = compute_F(generator, p.grid, cfg)
    row = np.hstack([p.W0, np.eye(p.n)])
    U12 = row @ F.values
    return U12[:, :, : p.m], U12[:, :, p.m :], F


def solve_riccati_block_F(p: RiccatiProblem, cfg: SeriesConfig | None = None) -> Solution:
    """W = inv(U2) U1 with [U1, U2] = [W0, I] F([[-B, P], [Q, -A]])."""
    U1, U2, F = riccati_block_F_factors(p, cfg)
    W, blow_up = _left_quotients(U2, U1)
    return _solution(
        W,
        p.grid,
        p.W0,
        terms_used={"F[[-B,P],[Q,-A]]": F.terms_used},
        residual=riccati_residual(p, W),
        blow_up_node=blow_up,
        factors={"U1": U1, "U2": U2},
    )


def riccati_from_particular(p: RiccatiProblem, cfg: SeriesConfig | None = None) -> Solution:
    """General solution composed from the particular solution Y with Y(x_lo) = 0.

    W = Y + E(A - Y P) W0 inv(I + (int R) W0) F(-(B + P Y)),
    R = F(-(B + P Y)) P E(A - Y P).

    Raises:
        RiccatiBlowUpError: Y itself escapes inside the grid.
    """
    cfg = cfg or SeriesConfig()
    g = p.grid
    zero_start = RiccatiProblem(p.A, p.B, p.P, p.Q, np.zeros_like(p.W0), g)
    Ysol, _ = solve_riccati_block_E(zero_start, cfg)
    if Ysol.blow_up_node is not None:
        raise RiccatiBlowUpError(Ysol.blow_up_node, Ysol.blow_up_x)
    Y = Ysol.values

    A, B, P = (sample_on_grid(c, g) for c in (p.A, p.B, p.P))
    left = compute_E(A - Y @ P, g, cfg)
    right = compute_F(-(B + P @ Y), g, cfg)
    R = right.values @ P @ left.values
    bracket = np.eye(p.m) + cumulative_integral(R, g) @ p.W0
    middle, blow_up = _right_quotients(np.broadcast_to(p.W0, (g.n_intervals + 1,) + p.W0.shape), bracket)
    k = middle.shape[0]
    W = Y[:k] + left.values[:k] @ middle @ right.values[:k]
    terms = {"Y": Ysol.terms_used, "E(A-YP)": left.terms_used, "F(-(B+PY))": right.terms_used}
    return _solution(W, g, p.W0, terms_used=terms, residual=riccati_residual(p, W), blow_up_node=blow_up)


def scalar_riccati(a: Expr, b: Expr, c: Expr, y0: float, grid: Grid, cfg: SeriesConfig | None = None) -> Solution:
    """dy/dx + a y^2 + b y + c = 0 as the 1x1 case P=a, B=b, A=0, Q=-c."""
    d = _domain(grid)

    def cell(e):
        return CoeffMatrix(((e,),), d)

    problem = RiccatiProblem(cell(Num(0.0)), cell(b), cell(a), cell(Neg(c)), [[y0]], grid)
    return solve_riccati_block_E(problem, cfg)[0]
