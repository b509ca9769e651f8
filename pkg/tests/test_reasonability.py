import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import KNAPSACK, random_mip
from symqubo import MipInstance, SignatureConfig, build_partition, constraint_signature, read_mps, variable_signature
from symqubo.reasonability import max_decomp_class, value_key


@pytest.fixture(scope="module")
def knapsack():
    return read_mps(KNAPSACK)


def test_knapsack_classes(knapsack):
    p = build_partition(knapsack)
    assert p.var_classes == ((0, 1), (2,), (3, 4, 5), (6,))
    assert (p.nu, p.mu) == (15, 1)
    assert p.var_class(4) == (3, 4, 5)
    assert p.var_reasonable(0, 1) and not p.var_reasonable(0, 3)


def test_knapsack_signatures(knapsack):
    assert variable_signature(knapsack, 0) == variable_signature(knapsack, 1)
    assert variable_signature(knapsack, 0) != variable_signature(knapsack, 3)


def test_equal_cost_split_by_column_coefficients(knapsack):
    # x3 costs the same as x1 but weighs twice as much
    plain = SignatureConfig(use_coefficients=False)
    assert variable_signature(knapsack, 0, plain) == variable_signature(knapsack, 2, plain)
    assert variable_signature(knapsack, 0) != variable_signature(knapsack, 2)
    assert build_partition(knapsack, plain).nu == 19


def test_bounds_flag():
    mip = MipInstance.from_dense([[1, 1]], [1], [1, 1], upper=[1, 5])
    assert variable_signature(mip, 0) != variable_signature(mip, 1)
    off = SignatureConfig(use_bounds=False)
    assert variable_signature(mip, 0, off) == variable_signature(mip, 1, off)


def test_sense_flag():
    mip = MipInstance.from_dense([[1], [1]], [2, 2], [1], sense=["<=", ">="])
    assert constraint_signature(mip, 0) != constraint_signature(mip, 1)
    off = SignatureConfig(use_sense=False)
    assert constraint_signature(mip, 0, off) == constraint_signature(mip, 1, off)


def test_degree_and_size_sharpening():
    mip = MipInstance.from_dense([[1, 1, 1], [1, 0, 0]], [1, 1], [1, 1, 1])
    loose = SignatureConfig(use_coefficients=False)
    assert build_partition(mip, loose).var_classes == ((0, 1, 2),)
    sharp = SignatureConfig(use_coefficients=False, sharpen_var_degree=True, sharpen_con_size=True)
    p = build_partition(mip, sharp)
    assert p.var_classes == ((0,), (1, 2))
    assert p.con_classes == ((0,), (1,))


def test_all_collide_and_all_distinct():
    same = MipInstance.from_dense([[1, 1, 1]], [1], [1, 1, 1])
    assert build_partition(same).nu == 9
    distinct = MipInstance.from_dense([[1, 2, 3]], [1], [1, 2, 3])
    assert build_partition(distinct).nu == 3


def test_tolerance_digits():
    mip = MipInstance.from_dense([[1, 1]], [1], [1.0, 1.0000001])
    assert build_partition(mip).nu == 2
    assert build_partition(mip, SignatureConfig(coeff_tolerance_digits=6)).nu == 4
    assert value_key(-0.0, None) == 0.0
    with pytest.raises(ValueError):
        SignatureConfig(coeff_tolerance_digits=0)


def test_index_errors(knapsack):
    with pytest.raises(IndexError):
        variable_signature(knapsack, 7)
    with pytest.raises(IndexError):
        constraint_signature(knapsack, 1)


def test_max_class_ties_go_to_lower_id():
    mip = MipInstance.from_dense([[1, 1, 2, 2]], [1], [1, 1, 1, 1])
    assert max_decomp_class(build_partition(mip)) == (0, 2)


configs = st.builds(
    SignatureConfig,
    use_bounds=st.booleans(),
    use_sense=st.booleans(),
    use_coefficients=st.booleans(),
    sharpen_var_degree=st.booleans(),
    sharpen_con_size=st.booleans(),
)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), configs)
def test_partition_invariants(seed, config):
    mip = random_mip(np.random.default_rng(seed))
    p = build_partition(mip, config)
    assert sorted(j for c in p.var_classes for j in c) == list(range(mip.n))
    assert sorted(i for c in p.con_classes for i in c) == list(range(mip.m))
    assert mip.n <= p.nu <= mip.n**2 and mip.m <= p.mu <= mip.m**2
    for c in p.var_classes:
        assert len({variable_signature(mip, j, config) for j in c}) == 1
        assert list(c) == sorted(c)
    for c in p.con_classes:
        assert len({constraint_signature(mip, i, config) for i in c}) == 1
    # class ids follow first appearance
    firsts = [c[0] for c in p.var_classes]
    assert firsts == sorted(firsts)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_refinement_never_grows_classes(seed):
    mip = random_mip(np.random.default_rng(seed))
    coarse = build_partition(mip, SignatureConfig(use_coefficients=False))
    fine = build_partition(mip, SignatureConfig(sharpen_var_degree=True, sharpen_con_size=True))
    assert fine.nu <= coarse.nu and fine.mu <= coarse.mu
    for c in fine.var_classes:
        assert len({coarse.var_class_of[j] for j in c}) == 1
