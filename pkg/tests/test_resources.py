import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import KNAPSACK, symbolic_energy
from symqubo import build_partition, build_reduced, count_terms, power_fit, read_mps, zephyr_estimate
from symqubo.qubo import Entry, PenaltyWeights, QuboModel, VarRegistry, _Accumulator
from symqubo.report import regress
from symqubo.resources import linear_fit_origin

TABLE = [(6, 1, 39), (152, 10, 3360), (153, 11, 3402), (52, 4, 510),
         (75, 6, 945), (57, 5, 594), (63, 5, 702), (65, 5, 740)]


@pytest.mark.parametrize("q,g,qubits", TABLE)
def test_zephyr_table(q, g, qubits):
    z = zephyr_estimate(q)
    assert (z.g, z.qubit_bound) == (g, qubits)
    assert z.zephyr_total == 32 * g * g + 16 * g


def test_zephyr_clique_boundary():
    # Z_g holds a clique of 16 g - 8 vertices
    assert zephyr_estimate(8).g == 1
    assert zephyr_estimate(9).g == 2
    assert zephyr_estimate(24).g == 2 and zephyr_estimate(25).g == 3
    with pytest.raises(ValueError):
        zephyr_estimate(0)


@given(st.integers(1, 5000))
def test_zephyr_monotone(q):
    a, b = zephyr_estimate(q), zephyr_estimate(q + 1)
    assert a.g <= b.g and a.qubit_bound < b.qubit_bound
    assert 16 * a.g - 8 >= q > 16 * (a.g - 1) - 8
    assert a.qubit_bound == math.ceil((q + 8) ** 2 / 8 + q + 8)


def test_count_terms_of_one_hot_pair():
    reg = VarRegistry(2, 1, (Entry("pi", 0, 0), Entry("pi", 0, 1)))
    acc = _Accumulator(reg)
    acc.add_one_hot(reg.entries, 1.0)
    assert count_terms(acc.model(PenaltyWeights(), "t")) == (2, 1, 3)
    assert count_terms(QuboModel(reg, 5.0, {}, {})) == (0, 0, 0)


@pytest.mark.parametrize("k", [0.5, 1, 1.764, 2])
def test_power_fit_noiseless(k):
    pts = [(x, x**k) for x in (2, 3, 7, 20, 150)]
    assert abs(power_fit(pts) - k) < 1e-12


def test_power_fit_single_point():
    assert power_fit([(7, 15)]) == pytest.approx(math.log(15) / math.log(7), abs=1e-15)


def test_power_fit_errors():
    with pytest.raises(ValueError):
        power_fit([])
    with pytest.raises(ValueError):
        power_fit([(1, 3)])
    with pytest.raises(ValueError):
        power_fit([(0, 3)])


def test_linear_fit_origin():
    assert linear_fit_origin([(10, 3.24), (20, 6.48)]) == pytest.approx(0.324)
    with pytest.raises(ValueError):
        linear_fit_origin([(0, 1)])


def test_regress_rows():
    rows = [{"n": n, "m": m, "nu": n**1.5, "mu": m**2, "error": ""} for n, m in ((4, 2), (9, 3), (16, 5))]
    rows.append({"n": "", "m": "", "nu": "", "mu": "", "error": "broken"})
    out = regress(rows)
    assert out["nu_vs_n"] == {"k": pytest.approx(1.5, abs=1e-12), "points": 3}
    assert out["mu_vs_m"]["k"] == pytest.approx(2, abs=1e-12)
    assert out["qubits_vs_terms"] is None
    assert out["reference"]["nu_vs_n"] == 1.764
    with pytest.raises(ValueError):
        regress(rows[:1])


@given(st.integers(1, 400))
def test_clique_boundary_identity(g):
    z = zephyr_estimate(16 * g - 8)
    assert z.g == g and z.qubit_bound == z.zephyr_total == 32 * g * g + 16 * g


def test_power_fit_noisy():
    rng = np.random.default_rng(18)
    xs = rng.uniform(5, 5000, 300)
    ys = xs**1.8 * np.exp(rng.normal(0, 0.2, xs.size))
    assert abs(power_fit(zip(xs, ys)) - 1.8) < 0.05


def test_knapsack_reduced_term_count():
    # coefficients recovered from the dense oracle by differencing: the linear
    # term of x_k is E(e_k) - E(0), the coupler of (k, l) is the mixed difference
    mip = read_mps(KNAPSACK)
    p = build_partition(mip)
    model = build_reduced(mip, p)
    reg, w = model.registry, PenaltyWeights()
    q = model.num_variables

    def e(*on):
        x = np.zeros(q)
        x[list(on)] = 1
        return symbolic_energy(mip, p, reg, x, w, "reduced")

    base = e()
    lin = {k: e(k) - base for k in range(q)}
    quad = {(k, l): e(k, l) - e(k) - e(l) + base for k in range(q) for l in range(k + 1, q)}
    expected = sum(v != 0 for v in lin.values()) + sum(v != 0 for v in quad.values())
    assert count_terms(model)[2] == expected
    assert model.offset == base
    assert model.linear == {k: v for k, v in lin.items() if v}
    assert model.quadratic == {k: v for k, v in quad.items() if v}
