"""Fixed-step classical RK4 reference integrators.

The oracle evaluates coefficients straight from their expressions at every
RK stage point, so it shares nothing with the propagator path except the
parser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coeff import CoeffMatrix
from .dense import mat_norm_max
from .series import Grid
from .solvers import LinearIvp, RiccatiProblem, Solution


class DivergenceError(ArithmeticError):
    def __init__(self, last_finite_x: float, guard: float):
        super().__init__(f"solution exceeded {guard:g} after x={last_finite_x!r}")
        self.last_finite_x = last_finite_x


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    step: float = 1e-4
    blow_up_guard: float = 1e8

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")


def _stage_samples(c: CoeffMatrix, grid: Grid, substeps: int) -> np.ndarray:
    """Coefficient values at every half step: index 2j is x_j, 2j+1 the midpoint."""
    half = grid.h / (2 * substeps)
    count = 2 * grid.n_intervals * substeps + 1
    xs = grid.x_lo + half * np.arange(count)
    xs[-1] = grid.x_hi
    return c.sample(xs)


def _substeps(grid: Grid, cfg: OracleConfig) -> int:
    return max(1, math.ceil(grid.h / cfg.step - 1e-9))


def _integrate(rhs, y0: np.ndarray, grid: Grid, cfg: OracleConfig, substeps: int):
    """Run RK4; return grid-node samples and the last finite x if the guard tripped."""
    s = grid.h / substeps
    y = np.array(y0, dtype=np.float64)
    out = [y.copy()]
    j = 0
    for _node in range(grid.n_intervals):
        for _ in range(substeps):
            k1 = rhs(2 * j, y)
            k2 = rhs(2 * j + 1, y + 0.5 * s * k1)
            k3 = rhs(2 * j + 1, y + 0.5 * s * k2)
            k4 = rhs(2 * j + 2, y + s * k3)
            y_next = y + (s / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(y_next)) or mat_norm_max(y_next) > cfg.blow_up_guard:
                return np.array(out), grid.x_lo + j * s
            y = y_next
            j += 1
        out.append(y.copy())
    return np.array(out), None


def rk4_linear(p: LinearIvp, cfg: OracleConfig | None = None) -> Solution:
    """RK4 for dU/dx = A(x) U + f(x), sampled on ``p.grid``.

    Raises:
        DivergenceError: some entry exceeded ``cfg.blow_up_guard``.
    """
    cfg = cfg or OracleConfig()
    k = _substeps(p.grid, cfg)
    A = _stage_samples(p.A, p.grid, k)
    f = _stage_samples(p.forcing, p.grid, k)

    def rhs(i, u):
        return A[i] @ u + f[i]

    values, diverged = _integrate(rhs, p.C, p.grid, cfg, k)
    if diverged is not None:
        raise DivergenceError(diverged, cfg.blow_up_guard)
    return Solution(values=values, grid=p.grid)


def rk4_riccati(p: RiccatiProblem, cfg: OracleConfig | None = None) -> Solution:
    """RK4 for dW/dx = A W + Q - W P W - W B.

    Divergence is not raised: the returned solution stops at the last grid
    node before the guard tripped, ``blow_up_node`` is the next node and
    ``divergence_x`` the last finite RK abscissa.
    """
    cfg = cfg or OracleConfig()
    k = _substeps(p.grid, cfg)
    A, B, P, Q = (_stage_samples(c, p.grid, k) for c in (p.A, p.B, p.P, p.Q))

    def rhs(i, w):
        return A[i] @ w + Q[i] - w @ P[i] @ w - w @ B[i]

    values, diverged = _integrate(rhs, p.W0, p.grid, cfg, k)
    if diverged is None:
        return Solution(values=values, grid=p.grid)
    return Solution(values=values, grid=p.grid, blow_up_node=len(values), divergence_x=diverged)


def compare(a: Solution, b: Solution, x_max: float | None = None) -> float:
    """Sup over shared nodes of max|a - b|, stopping before either blow-up
    (and past ``x_max`` when given)."""
    if a.grid != b.grid:
        raise GridMismatchError(f"solutions live on different grids: {a.grid} vs {b.grid}")
    count = min(len(a.values), len(b.values))
    if x_max is not None:
        count = min(count, int(np.searchsorted(a.grid.nodes, x_max, side="right")))
    if count == 0:
        return 0.0
    return mat_norm_max(a.values[:count] - b.values[:count])
