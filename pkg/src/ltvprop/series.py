"""Iterated-integral propagators E[X] and F[X] on a uniform grid.

E[X] solves dY/dx = X Y and F[X] solves dY/dx = Y X, both with Y = I at the
grid base point.  Each is summed term by term,

    T_0 = I,  T_{k+1}(x) = int_{x_lo}^x X(t) T_k(t) dt     (E)
    S_0 = I,  S_{k+1}(x) = int_{x_lo}^x S_k(t) X(t) dt     (F)

with every integral taken by the cumulative Simpson rule on the grid nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coeff import BOUND_MARGIN, CoeffMatrix
from .dense import mat_norm_max

DET_FLOOR = 1e-300


class TruncationError(RuntimeError):
    """The series did not reach ``term_tol`` within ``max_terms`` terms."""

    def __init__(self, terms: int, last_term_norm: float, term_tol: float):
        super().__init__(
            f"series not converged after {terms} terms: last term norm {last_term_norm:.3e} >= tol {term_tol:.1e}"
        )
        self.terms = terms
        self.last_term_norm = last_term_norm


class InternalConsistencyError(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid:
    x_lo: float
    x_hi: float
    n_intervals: int

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError(f"grid needs x_lo < x_hi, got [{self.x_lo}, {self.x_hi}]")
        if self.n_intervals < 2 or self.n_intervals % 2:
            raise ValueError(f"n_intervals must be a positive even integer, got {self.n_intervals}")

    @property
    def h(self) -> float:
        return (self.x_hi - self.x_lo) / self.n_intervals

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.n_intervals + 1)

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo


@dataclass(frozen=True)
class SeriesConfig:
    max_terms: int = 40
    term_tol: float = 1e-13
    quadrature: str = "simpson"

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be positive")
        if not self.term_tol > 0:
            raise ValueError("term_tol must be positive")
        if self.quadrature != "simpson":
            raise ValueError(f"unsupported quadrature {self.quadrature!r}")


@dataclass(frozen=True)
class PropagatorTable:
    kind: str
    values: np.ndarray = field(repr=False)
    terms_used: int
    last_term_norm: float
    tail_bound: float
    grid: Grid
    M: float = 0.0


def cumulative_integral(samples, grid: Grid) -> np.ndarray:
    """Running integral from ``grid.x_lo`` of node-sampled matrices.

    Even nodes use composite Simpson over interval pairs.  Odd nodes add the
    integral over the one preceding interval of the cubic through the four
    nearest nodes, (h/24)(-f[i-2] + 13 f[i-1] + 13 f[i] - f[i+1]), with the
    one-sided (h/24)(9, 19, -5, 1) weights at node 1.  Grids of two intervals
    fall back to the three-point (h/12)(5, 8, -1) increment.
    """
    f = np.asarray(samples, dtype=np.float64)
    if f.shape[0] != grid.n_intervals + 1:
        raise ValueError(f"expected {grid.n_intervals + 1} samples, got {f.shape[0]}")
    h = grid.h
    out = np.zeros_like(f)
    pair = (h / 3.0) * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    out[2::2] = np.cumsum(pair, axis=0)
    if grid.n_intervals == 2:
        out[1] = (h / 12.0) * (5.0 * f[0] + 8.0 * f[1] - f[2])
        return out
    out[1] = (h / 24.0) * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
    out[3::2] = out[2:-2:2] + (h / 24.0) * (-f[1:-3:2] + 13.0 * f[2:-2:2] + 13.0 * f[3:-1:2] - f[4::2])
    return out


def tail_bound(M: float, n: int, x: float, K: int) -> float:
    """Bound (1/n) sum_{k>K} (n M x)^k / k! on the series terms past index K.

    Summed directly from k = K+1 instead of subtracting a partial sum from
    exp(n M x), which would drown small tails in cancellation.
    """
    z = n * M * abs(x)
    if z == 0.0:
        return 0.0
    k = K + 1
    term = math.exp(k * math.log(z) - math.lgamma(k + 1))
    total = 0.0
    while True:
        total += term
        k += 1
        term *= z / k
        if k > z and term <= 1e-17 * total:
            break
    return max(total / n, 0.0)


def sample_on_grid(X, grid: Grid) -> np.ndarray:
    """Node samples ``(N+1, r, c)`` from a CoeffMatrix or a pre-sampled table."""
    if isinstance(X, CoeffMatrix):
        if not (X.contains(grid.x_lo) and X.contains(grid.x_hi)):
            raise ValueError(f"grid [{grid.x_lo}, {grid.x_hi}] is not inside coefficient domain {list(X.domain)}")
        return X.sample(grid.nodes)
    samples = np.asarray(X, dtype=np.float64)
    if samples.ndim != 3 or samples.shape[0] != grid.n_intervals + 1:
        raise ValueError(f"sampled coefficient must have shape (N+1, r, c), got {samples.shape}")
    if not np.all(np.isfinite(samples)):
        raise ValueError("sampled coefficient has non-finite entries")
    return samples


def _propagate(X, grid: Grid, cfg: SeriesConfig, kind: str) -> PropagatorTable:
    xs = sample_on_grid(X, grid)
    n = xs.shape[1]
    if xs.shape[2] != n:
        raise ValueError(f"generator must be square, got {xs.shape[1]}x{xs.shape[2]}")
    term = np.broadcast_to(np.eye(n), xs.shape).copy()
    total = term.copy()
    last = math.inf
    terms_used = None
    for k in range(1, cfg.max_terms + 1):
        integrand = xs @ term if kind == "E" else term @ xs
        term = cumulative_integral(integrand, grid)
        total += term
        last = mat_norm_max(term)
        if last < cfg.term_tol:
            terms_used = k
            break
    if terms_used is None:
        raise TruncationError(cfg.max_terms, last, cfg.term_tol)

    dets = np.linalg.det(total)
    if not np.all(dets > DET_FLOOR):
        bad = int(np.argmax(~(dets > DET_FLOOR)))
        raise InternalConsistencyError(
            f"det {kind}[X] = {dets[bad]:.3e} at node {bad} is not positive; quadrature breakdown"
        )
    M = BOUND_MARGIN * mat_norm_max(xs)
    total.flags.writeable = False
    return PropagatorTable(
        kind=kind,
        values=total,
        terms_used=terms_used,
        last_term_norm=last,
        tail_bound=tail_bound(M, n, grid.length, terms_used - 1),
        grid=grid,
        M=M,
    )


def compute_E(X, grid: Grid, cfg: SeriesConfig | None = None) -> PropagatorTable:
    """Left-ordered propagator, dE/dx = X E, E(x_lo) = I.

    ``X`` is a square CoeffMatrix whose domain covers the grid, or an array
    of node samples with shape ``(N+1, n, n)``.

    Raises:
        TruncationError: no term fell below ``cfg.term_tol`` by ``cfg.max_terms``.
        CoeffDomainError: a coefficient entry is non-finite at some node.
    """
    return _propagate(X, grid, cfg or SeriesConfig(), "E")


def compute_F(X, grid: Grid, cfg: SeriesConfig | None = None) -> PropagatorTable:
    """Right-ordered propagator, dF/dx = F X, F(x_lo) = I."""
    return _propagate(X, grid, cfg or SeriesConfig(), "F")


def propagator_residual(t: PropagatorTable, X, grid: Grid) -> float:
    """Max-abs defect of the defining ODE under centered differencing."""
    xs = sample_on_grid(X, grid)
    v = t.values
    deriv = (v[2:] - v[:-2]) / (2.0 * grid.h)
    rhs = xs[1:-1] @ v[1:-1] if t.kind == "E" else v[1:-1] @ xs[1:-1]
    return mat_norm_max(deriv - rhs)
