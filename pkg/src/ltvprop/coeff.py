"""Matrix-valued coefficient functions built from expressions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import DomainError, Expr, Neg, Num, evaluate, evaluate_many, parse

BOUND_MARGIN = 1.25

ZERO = Num(0.0)


class CoeffDomainError(DomainError):
    """Entry ``(row, col)`` of a coefficient matrix is non-finite at ``x``."""

    def __init__(self, row: int, col: int, cause: DomainError):
        super().__init__(cause.x, cause.subexpr, f"entry ({row}, {col})")
        self.row = row
        self.col = col


@dataclass(frozen=True)
class CoeffMatrix:
    entries: tuple[tuple[Expr, ...], ...]
    domain: tuple[float, float]

    def __post_init__(self):
        if not self.entries or not self.entries[0]:
            raise ValueError("coefficient matrix must be non-empty")
        if any(len(row) != len(self.entries[0]) for row in self.entries):
            raise ValueError("coefficient matrix rows must have equal length")
        lo, hi = self.domain
        if not (0.0 <= lo < hi):
            raise ValueError(f"domain must satisfy 0 <= x_lo < x_hi, got [{lo}, {hi}]")

    @classmethod
    def from_text(cls, rows, domain) -> "CoeffMatrix":
        """Build from a nested list of expression strings (or numbers)."""
        entries = tuple(tuple(parse(str(cell)) for cell in row) for row in rows)
        return cls(entries, (float(domain[0]), float(domain[1])))

    @classmethod
    def zeros(cls, rows: int, cols: int, domain) -> "CoeffMatrix":
        return cls(tuple((ZERO,) * cols for _ in range(rows)), (float(domain[0]), float(domain[1])))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __neg__(self) -> "CoeffMatrix":
        return CoeffMatrix(tuple(tuple(Neg(e) for e in row) for row in self.entries), self.domain)

    def contains(self, x: float) -> bool:
        return self.domain[0] <= x <= self.domain[1]

    def sample(self, xs) -> np.ndarray:
        """Entrywise values at every point of ``xs``; shape ``(len(xs), rows, cols)``."""
        xs = np.asarray(xs, dtype=np.float64)
        out = np.empty((xs.size, self.rows, self.cols))
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                try:
                    out[:, i, j] = evaluate_many(e, xs)
                except DomainError as exc:
                    raise CoeffDomainError(i, j, exc) from None
        return out


def block(blocks: list[list[CoeffMatrix]]) -> CoeffMatrix:
    """Assemble a block coefficient matrix; all blocks must share one domain."""
    domain = blocks[0][0].domain
    rows = []
    for brow in blocks:
        if any(b.domain != domain for b in brow):
            raise ValueError("blocks must share a domain")
        height = brow[0].rows
        if any(b.rows != height for b in brow):
            raise ValueError("blocks in one block-row must have equal heights")
        for r in range(height):
            rows.append(tuple(e for b in brow for e in b.entries[r]))
    return CoeffMatrix(tuple(rows), domain)


def eval_matrix(c: CoeffMatrix, x: float) -> np.ndarray:
    if not c.contains(x):
        raise ValueError(f"x={x} outside coefficient domain {list(c.domain)}")
    out = np.empty(c.shape)
    for i, row in enumerate(c.entries):
        for j, e in enumerate(row):
            try:
                out[i, j] = evaluate(e, x)
            except DomainError as exc:
                raise CoeffDomainError(i, j, exc) from None
    return out


@dataclass(frozen=True)
class BoundReport:
    M: float
    probes: int
    offending_point: float | None = None


class BoundError(DomainError):
    def __init__(self, report: BoundReport, cause: DomainError):
        super().__init__(cause.x, cause.subexpr, "bound probe")
        self.report = report


def bound_estimate(c: CoeffMatrix, probes: int = 101) -> BoundReport:
    """Probe-based estimate of ``sup_x max|c(x)|`` over the domain.

    The sampled maximum over ``probes`` equispaced points (endpoints
    included) is inflated by 25%; an overestimate only loosens the
    truncation bound that consumes it.

    Raises:
        BoundError: some probe point is non-finite; ``.report.offending_point``
            holds it.
    """
    if probes < 2:
        raise ValueError("probes must be >= 2")
    xs = np.linspace(c.domain[0], c.domain[1], probes)
    try:
        values = c.sample(xs)
    except DomainError as exc:
        raise BoundError(BoundReport(float("inf"), probes, exc.x), exc) from None
    return BoundReport(BOUND_MARGIN * float(np.max(np.abs(values))), probes)
