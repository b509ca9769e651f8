import json

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from oracles import KNAPSACK
from symqubo import SymmetryDetector, build_partition, read_mps
from symqubo.validation import parse_form, resolve_class

ORBITS = [[0, 1], [2], [3, 4, 5], [6]]


def test_params_and_clone():
    det = SymmetryDetector(form="plus-reduced", seed=3)
    params = det.get_params()
    assert params["form"] == "plus-reduced" and params["seed"] == 3
    twin = clone(det)
    assert twin.get_params() == params
    det.set_params(restarts=5)
    assert det.restarts == 5


def test_exact_fit_on_knapsack():
    det = SymmetryDetector().fit(KNAPSACK)
    assert det.source_ == "exact"
    assert det.orbits_ == ORBITS
    assert len(det.generators_) == 12
    assert det.n_rejected_ == 0
    assert list(det.labels_) == [0, 0, 1, 2, 2, 2, 3]
    assert det.n_features_in_ == 7
    rep = det.report()
    assert rep["orbit_names"] == [["x1", "x2"], ["x3"], ["x4", "x5", "x6"], ["x7"]]
    assert rep["verified"] is True


@pytest.mark.parametrize("form", ["full", "plus-full", "plus-reduced", "decomp:max", "decomp:x1", "plus-decomp:2"])
def test_other_forms(form):
    det = SymmetryDetector(form=form, exact_limit=60).fit(read_mps(KNAPSACK))
    if form.endswith("full") or form.endswith("reduced"):
        assert det.orbits_ == ORBITS
    else:
        # only permutations inside one class are searched
        assert all(set(o) <= set(det.partition_.var_class(o[0])) for o in det.orbits_)
        assert max(map(len, det.orbits_)) > 1


def test_anneal_fit_is_deterministic():
    a = SymmetryDetector(exact_limit=0, seed=4, restarts=16, sweeps=400).fit(KNAPSACK)
    b = SymmetryDetector(exact_limit=0, seed=4, restarts=16, sweeps=400).fit(KNAPSACK)
    assert a.source_ == "anneal"
    assert json.dumps(a.report()) == json.dumps(b.report())
    assert any(pi != tuple(range(7)) for pi, _ in a.generators_)


def test_fit_predict_and_bytes():
    with open(KNAPSACK, "rb") as fh:
        labels = SymmetryDetector().fit_predict(fh.read())
    assert np.array_equal(labels, [0, 0, 1, 2, 2, 2, 3])


def test_input_validation(tmp_path):
    with pytest.raises(TypeError):
        SymmetryDetector().fit(42)
    with pytest.raises(FileNotFoundError):
        SymmetryDetector().fit(str(tmp_path / "missing.mps"))
    with pytest.raises(NotFittedError):
        SymmetryDetector().report()
    with pytest.raises(ValueError):
        SymmetryDetector(form="weird").fit(KNAPSACK)


def test_form_parsing():
    assert parse_form("plus-decomp:max") == ("decomp", True, "max")
    assert str(parse_form("reduced")) == "reduced"
    for bad in ("decomp", "reduced:1", "plus-", "nope"):
        with pytest.raises(ValueError):
            parse_form(bad)


def test_class_references():
    mip = read_mps(KNAPSACK)
    p = build_partition(mip)
    assert resolve_class(mip, p, "max") == 2
    assert resolve_class(mip, p, "x4") == 2
    assert resolve_class(mip, p, "1") == 1
    assert resolve_class(mip, p, 3) == 3
    for bad in ("9", "zz", -1):
        with pytest.raises(ValueError):
            resolve_class(mip, p, bad)
