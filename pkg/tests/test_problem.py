import copy
import json

import numpy as np
import pytest

from ltvprop.coeff import CoeffMatrix
from ltvprop.expr import ExprSyntaxError
from ltvprop.problem import ProblemError, ProblemFile, build, grid_of, load_problem, series_config_of
from ltvprop.solvers import LinearIvp, RiccatiProblem, SylvesterIvp

RICCATI = {
    "kind": "riccati",
    "dimensions": {"n": 2, "m": 1},
    "coefficients": {"A": [["0", "1"], ["x", "0"]], "B": [["0"]], "P": [["1", "0"]], "Q": [["0"], [0.5]]},
    "initial": [[1.0], [0.0]],
    "interval": [0.0, 1.0],
    "n_intervals": 20,
}


def load(doc):
    return load_problem(json.dumps(doc))


def test_riccati_round_trip():
    pf = load(RICCATI)
    p = build(pf)
    assert isinstance(p, RiccatiProblem)
    assert (p.n, p.m) == (2, 1)
    assert grid_of(pf).n_intervals == 20
    assert p.Q.sample(np.array([0.3]))[0, 1, 0] == 0.5


def test_defaults_and_overrides():
    doc = copy.deepcopy(RICCATI)
    del doc["n_intervals"]
    doc["series"] = {"max_terms": 7}
    pf = load(doc)
    assert pf.n_intervals == 200
    cfg = series_config_of(pf)
    assert cfg.max_terms == 7 and cfg.term_tol == 1e-13


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(extra=1),
        lambda d: d["dimensions"].update(k=3),
        lambda d: d.update(n_intervals=21),
        lambda d: d.update(n_intervals=0),
        lambda d: d.update(interval=[1.0, 0.0]),
        lambda d: d.update(interval=[-1.0, 1.0]),
        lambda d: d.update(kind="unknown"),
        lambda d: d["coefficients"].update(Z=[["0"]]),
        lambda d: d["coefficients"].pop("P"),
        lambda d: d["coefficients"].update(P=[["1"], ["0"]]),
        lambda d: d.update(initial=[[1.0, 0.0]]),
        lambda d: d.pop("initial"),
        lambda d: d["dimensions"].pop("m"),
        lambda d: d.update(series={"term_tol": 0}),
    ],
)
def test_rejects_invalid_documents(mutate):
    doc = copy.deepcopy(RICCATI)
    mutate(doc)
    with pytest.raises(ProblemError):
        load(doc)


def test_invalid_json():
    with pytest.raises(ProblemError, match="invalid JSON"):
        load_problem("{")


def test_linear_optional_forcing_and_flat_initial():
    pf = load({"kind": "linear", "dimensions": {"n": 2}, "coefficients": {"A": [["0", "1"], ["-1", "0"]]},
               "initial": [1.0, 0.0], "interval": [0, 1], "n_intervals": 4})
    p = build(pf)
    assert isinstance(p, LinearIvp)
    assert np.all(p.forcing.sample(np.array([0.5])) == 0)
    assert p.C.shape == (2, 1)


def test_nth_order_and_scalar_riccati():
    p = build(load({"kind": "nth-order", "dimensions": {"n": 2}, "coefficients": {"a": ["0", "1"], "f": "x"},
                    "initial": [0.0, 1.0], "interval": [0, 1], "n_intervals": 4}))
    assert isinstance(p, LinearIvp) and p.A.shape == (2, 2)
    with pytest.raises(ProblemError):
        load({"kind": "nth-order", "dimensions": {"n": 2}, "coefficients": {"a": ["0"]},
              "initial": [0.0, 1.0], "interval": [0, 1]})
    r = build(load({"kind": "scalar-riccati", "dimensions": {"n": 1}, "coefficients": {"a": "1", "b": "0", "c": "1"},
                    "initial": 0.0, "interval": [0, 1], "n_intervals": 4}))
    assert isinstance(r, RiccatiProblem)
    assert r.Q.sample(np.array([0.0]))[0, 0, 0] == -1.0
    with pytest.raises(ProblemError):
        load({"kind": "scalar-riccati", "dimensions": {"n": 1}, "coefficients": {"a": "1", "b": "0", "c": "1"},
              "initial": [0.0], "interval": [0, 1]})


def test_sylvester_and_propagator():
    s = build(load({"kind": "sylvester", "dimensions": {"n": 1, "m": 2}, "coefficients": {
        "A": [["x"]], "B": [["0", "1"], ["0", "0"]], "P": [["1", "1"]]}, "initial": [[0.0, 1.0]],
        "interval": [0, 1], "n_intervals": 4}))
    assert isinstance(s, SylvesterIvp)
    X = build(load({"kind": "propagator", "dimensions": {"n": 1}, "coefficients": {"X": [["x"]]}, "interval": [0, 1]}))
    assert isinstance(X, CoeffMatrix)
    with pytest.raises(ProblemError):
        load({"kind": "propagator", "dimensions": {"n": 1}, "coefficients": {"X": [["x"]]}, "initial": [[1.0]],
              "interval": [0, 1]})


def test_syntax_errors_surface_at_build():
    doc = copy.deepcopy(RICCATI)
    doc["coefficients"]["B"] = [["sin(x"]]
    with pytest.raises(ExprSyntaxError) as info:
        build(ProblemFile.model_validate(doc))
    assert info.value.offset == 5
