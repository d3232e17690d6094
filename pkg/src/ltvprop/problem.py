"""Problem files: JSON documents describing one propagator or IVP run.

Example (scalar Riccati decay)::

    {
      "kind": "riccati",
      "dimensions": {"n": 1, "m": 1},
      "coefficients": {"A": [["0"]], "B": [["0"]], "P": [["1"]], "Q": [["0"]]},
      "initial": [[1.0]],
      "interval": [0.0, 1.0],
      "n_intervals": 200
    }
"""

from __future__ import annotations

import json
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .coeff import CoeffMatrix
from .expr import parse
from .series import Grid, SeriesConfig
from .solvers import LinearIvp, RiccatiProblem, SylvesterIvp, companion_from_scalar

Kind = Literal["propagator", "linear", "nth-order", "sylvester", "riccati", "riccati-particular", "scalar-riccati"]

Cell = Union[str, float]

# coefficient name -> (row dimension, column dimension); "1" is a literal size
_MATRIX_SHAPES = {
    "propagator": {"X": ("n", "n")},
    "linear": {"A": ("n", "n"), "forcing": ("n", "1")},
    "sylvester": {"A": ("n", "n"), "B": ("m", "m"), "P": ("n", "m")},
    "riccati": {"A": ("n", "n"), "B": ("m", "m"), "P": ("m", "n"), "Q": ("n", "m")},
}
_MATRIX_SHAPES["riccati-particular"] = _MATRIX_SHAPES["riccati"]

_OPTIONAL = {"linear": {"forcing"}, "nth-order": {"f"}}

_INITIAL_SHAPES = {
    "propagator": None,
    "linear": ("n", "1"),
    "sylvester": ("n", "m"),
    "riccati": ("n", "m"),
    "riccati-particular": ("n", "m"),
}


class ProblemError(ValueError):
    """The problem file is malformed or inconsistent."""


class Dimensions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=1)
    m: Optional[int] = Field(default=None, ge=1)


class SeriesOverrides(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_terms: Optional[int] = Field(default=None, ge=1)
    term_tol: Optional[float] = Field(default=None, gt=0)


class ProblemFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Kind
    dimensions: Dimensions
    coefficients: dict[str, Union[list[list[Cell]], list[Cell], Cell]]
    initial: Optional[Union[list[list[float]], list[float], float]] = None
    interval: tuple[float, float]
    n_intervals: int = 200
    series: Optional[SeriesOverrides] = None
    oracle: bool = False

    @field_validator("n_intervals")
    @classmethod
    def _even(cls, v: int) -> int:
        if v < 2 or v % 2:
            raise ValueError("n_intervals must be a positive even integer")
        return v

    @field_validator("interval")
    @classmethod
    def _ordered(cls, v):
        if not 0 <= v[0] < v[1]:
            raise ValueError("interval must satisfy 0 <= x_lo < x_hi")
        return v

    @model_validator(mode="after")
    def _shapes(self):
        dims = {"n": self.dimensions.n, "m": self.dimensions.m, "1": 1}
        if self.kind in ("sylvester", "riccati", "riccati-particular") and self.dimensions.m is None:
            raise ValueError(f"kind {self.kind!r} needs dimensions.m")
        if self.kind == "scalar-riccati" and self.dimensions.n != 1:
            raise ValueError("scalar-riccati needs dimensions.n = 1")

        if self.kind in _MATRIX_SHAPES:
            expected = _MATRIX_SHAPES[self.kind]
            optional = _OPTIONAL.get(self.kind, set())
            _check_names(self.coefficients, set(expected), optional)
            for name, (r, c) in expected.items():
                if name in self.coefficients:
                    _check_matrix(name, self.coefficients[name], dims[r], dims[c])
            init = _INITIAL_SHAPES[self.kind]
            if init is None:
                if self.initial is not None:
                    raise ValueError("propagator problems take no initial value")
            else:
                if self.initial is None:
                    raise ValueError("initial value is required")
                _check_initial(self.initial, dims[init[0]], dims[init[1]])
        elif self.kind == "nth-order":
            _check_names(self.coefficients, {"a", "f"}, {"f"})
            a = self.coefficients["a"]
            if not isinstance(a, list) or any(isinstance(v, list) for v in a) or len(a) != self.dimensions.n:
                raise ValueError(f"coefficient 'a' must be a list of {self.dimensions.n} expressions")
            if isinstance(self.coefficients.get("f"), list):
                raise ValueError("coefficient 'f' must be a single expression")
            if not isinstance(self.initial, list) or len(self.initial) != self.dimensions.n or any(
                isinstance(v, list) for v in self.initial
            ):
                raise ValueError(f"initial must list {self.dimensions.n} values u^(n-1)(x_lo) .. u(x_lo)")
        else:  # scalar-riccati
            _check_names(self.coefficients, {"a", "b", "c"}, set())
            if any(isinstance(v, list) for v in self.coefficients.values()):
                raise ValueError("scalar-riccati coefficients must be single expressions")
            if isinstance(self.initial, list) or self.initial is None:
                raise ValueError("scalar-riccati needs a scalar initial value")
        return self


def _check_names(given: dict, expected: set, optional: set) -> None:
    unknown = sorted(set(given) - expected)
    if unknown:
        raise ValueError(f"unknown coefficient(s) {unknown}; expected {sorted(expected)}")
    missing = sorted(expected - optional - set(given))
    if missing:
        raise ValueError(f"missing coefficient(s) {missing}")


def _check_matrix(name, value, rows, cols) -> None:
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise ValueError(f"coefficient {name!r} must be a nested list")
    if len(value) != rows or any(len(r) != cols for r in value):
        raise ValueError(f"coefficient {name!r} must be {rows}x{cols}")


def _check_initial(value, rows, cols) -> None:
    if isinstance(value, list) and value and not isinstance(value[0], list) and cols == 1:
        value = [[v] for v in value]
    if not isinstance(value, list) or len(value) != rows or any(not isinstance(r, list) or len(r) != cols for r in value):
        raise ValueError(f"initial value must be {rows}x{cols}")


def load_problem(text: str) -> ProblemFile:
    """Parse and validate a problem document.

    Raises:
        ProblemError: invalid JSON, unknown fields or inconsistent shapes.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"invalid JSON: {exc}") from None
    try:
        return ProblemFile.model_validate(data)
    except ValidationError as exc:
        raise ProblemError(str(exc)) from None


def grid_of(pf: ProblemFile) -> Grid:
    return Grid(pf.interval[0], pf.interval[1], pf.n_intervals)


def series_config_of(pf: ProblemFile) -> SeriesConfig:
    s = pf.series or SeriesOverrides()
    defaults = SeriesConfig()
    return SeriesConfig(
        max_terms=s.max_terms if s.max_terms is not None else defaults.max_terms,
        term_tol=s.term_tol if s.term_tol is not None else defaults.term_tol,
    )


def _matrix(pf: ProblemFile, name: str, rows: int, cols: int) -> CoeffMatrix:
    if name not in pf.coefficients:
        return CoeffMatrix.zeros(rows, cols, pf.interval)
    return CoeffMatrix.from_text(pf.coefficients[name], pf.interval)


def _column(value) -> list[list[float]]:
    if value and not isinstance(value[0], list):
        return [[v] for v in value]
    return value


def build(pf: ProblemFile):
    """Turn a validated problem file into the solver-level object.

    Returns a CoeffMatrix for ``propagator``, a LinearIvp for ``linear`` and
    ``nth-order``, a SylvesterIvp, a RiccatiProblem (also for
    ``scalar-riccati``, via its 1x1 embedding).  Expression syntax errors
    propagate as ``ExprSyntaxError``.
    """
    g = grid_of(pf)
    n, m = pf.dimensions.n, pf.dimensions.m
    if pf.kind == "propagator":
        return CoeffMatrix.from_text(pf.coefficients["X"], pf.interval)
    if pf.kind == "linear":
        return LinearIvp(_matrix(pf, "A", n, n), _matrix(pf, "forcing", n, 1), _column(pf.initial), g)
    if pf.kind == "nth-order":
        a = [parse(str(v)) for v in pf.coefficients["a"]]
        f = parse(str(pf.coefficients.get("f", "0")))
        return companion_from_scalar(a, f, pf.initial, g)
    if pf.kind == "sylvester":
        return SylvesterIvp(_matrix(pf, "A", n, n), _matrix(pf, "B", m, m), _matrix(pf, "P", n, m), pf.initial, g)
    if pf.kind == "scalar-riccati":
        c = {k: parse(str(v)) for k, v in pf.coefficients.items()}
        d = pf.interval
        return RiccatiProblem(
            CoeffMatrix.zeros(1, 1, d),
            CoeffMatrix(((c["b"],),), d),
            CoeffMatrix(((c["a"],),), d),
            -CoeffMatrix(((c["c"],),), d),
            [[pf.initial]],
            g,
        )
    return RiccatiProblem(
        _matrix(pf, "A", n, n), _matrix(pf, "B", m, m), _matrix(pf, "P", m, n), _matrix(pf, "Q", n, m), pf.initial, g
    )
