import gzip
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import KNAPSACK
from symqubo import MipInstance, MPSError, MPSUnsupportedError, coefficient, parse_mps, read_mps, write_mps

FREE = """NAME tiny
ROWS
 N obj
 L r1
 G r2
 E r3
COLUMNS
 MARKER MARKER INTORG
 x obj 1 r1 2
 x r2 1
 MARKER MARKER INTEND
 y obj -1 r1 1
 y r3 3
RHS
 rhs r1 4 r2 1
 rhs r3 3
BOUNDS
 UP bnd x 5
 FR bnd y
ENDATA
"""


def fields(mip):
    return (
        mip.name, mip.objective, mip.rows, mip.rhs, mip.sense, mip.lower, mip.upper,
        mip.is_integer, mip.var_names, mip.row_names, mip.objective_sense, mip.objective_offset,
    )


def test_knapsack_file():
    mip = read_mps(KNAPSACK)
    assert (mip.n, mip.m) == (7, 1)
    assert mip.name == "KNAPSACK"
    assert mip.objective_sense == "max"
    assert mip.objective == {0: 1, 1: 1, 2: 1, 3: 2, 4: 2, 5: 2, 6: 3}
    assert mip.rows[0] == {0: 1, 1: 1, 2: 2, 3: 1, 4: 1, 5: 1, 6: 1}
    assert mip.rhs == (100,) and mip.sense == ("<=",)
    assert all(mip.is_integer)
    assert coefficient(mip, 0, 2) == 2


def test_free_format_sections():
    mip = parse_mps(FREE)
    assert mip.var_names == ("x", "y")
    assert mip.sense == ("<=", ">=", "=")
    assert mip.rhs == (4, 1, 3)
    assert mip.is_integer == (True, False)
    assert mip.upper[0] == 5 and mip.lower[0] == 0
    assert mip.lower[1] == -math.inf and mip.upper[1] == math.inf
    assert coefficient(mip, 2, 0) == 0.0  # implicit zero
    assert mip.integer_indices == (0,)


def test_coefficient_out_of_range():
    mip = parse_mps(FREE)
    with pytest.raises(IndexError):
        coefficient(mip, 3, 0)
    with pytest.raises(IndexError):
        coefficient(mip, 0, 2)


def test_bytes_and_gzip(tmp_path):
    path = tmp_path / "tiny.mps.gz"
    path.write_bytes(gzip.compress(FREE.encode()))
    assert fields(read_mps(path)) == fields(parse_mps(FREE.encode()))


def test_name_defaults_to_file_stem(tmp_path):
    path = tmp_path / "noname.mps"
    path.write_text(FREE.replace("NAME tiny", "NAME"))
    assert read_mps(path).name == "noname"


def test_ranges_expand_into_two_rows():
    text = FREE.replace("BOUNDS", "RANGES\n rng r1 3\nBOUNDS")
    mip = parse_mps(text)
    assert mip.m == 4
    assert mip.row_names[-1] == "r1_rng"
    assert (mip.sense[0], mip.rhs[0]) == (">=", 1)
    assert (mip.sense[3], mip.rhs[3]) == ("<=", 4)
    assert mip.rows[3] == mip.rows[0]


def test_objective_rhs_becomes_offset():
    mip = parse_mps(FREE.replace(" rhs r3 3", " rhs r3 3\n rhs obj 7"))
    assert mip.objective_offset == -7


def test_negative_upper_bound_frees_lower():
    mip = parse_mps(FREE.replace("UP bnd x 5", "UP bnd x -2"))
    assert mip.lower[0] == -math.inf and mip.upper[0] == -2


def test_binary_bound_marks_integer():
    mip = parse_mps(FREE.replace("FR bnd y", "BV bnd y"))
    assert mip.is_integer == (True, True)
    assert (mip.lower[1], mip.upper[1]) == (0, 1)


def test_extra_free_rows_are_dropped():
    text = FREE.replace(" N obj", " N obj\n N other").replace(" y r3 3", " y r3 3 other 9")
    assert parse_mps(text).rows == parse_mps(FREE).rows


@pytest.mark.parametrize(
    "edit",
    [
        lambda t: t.replace(" y r3 3", " y r3 3\n y r3 4"),  # duplicate entry
        lambda t: t.replace(" y r3 3", " y r9 3"),  # unknown row
        lambda t: t.replace(" UP bnd x 5", " UP bnd z 5"),  # unknown column
        lambda t: t.replace(" L r1", " Q r1"),  # bad row type
        lambda t: t.replace(" y obj -1 r1 1", " y obj abc r1 1"),  # bad number
        lambda t: t.replace(" UP bnd x 5", " XX bnd x 5"),  # bad bound type
        lambda t: t.replace(" rhs r3 3", " rhs r3 3\n rhs r3 4"),  # duplicate rhs
        lambda t: t.replace("ROWS", "ROWZ"),  # bad section
    ],
)
def test_malformed_input_raises(edit):
    with pytest.raises(MPSError):
        parse_mps(edit(FREE))


@pytest.mark.parametrize("section", ["SOS", "QUADOBJ", "QMATRIX", "QCMATRIX", "INDICATORS"])
def test_unsupported_sections(section):
    with pytest.raises(MPSUnsupportedError):
        parse_mps(FREE.replace("ENDATA", f"{section}\nENDATA"))


def test_semicontinuous_bound_unsupported():
    with pytest.raises(MPSUnsupportedError):
        parse_mps(FREE.replace("UP bnd x 5", "SC bnd x 5"))


def fixed_line(*fields):
    # columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
    starts = (1, 4, 14, 24, 39, 49)
    line = ""
    for start, text in zip(starts, fields):
        line = line.ljust(start) + text
    return line


def test_fixed_format_names_with_spaces():
    text = "\n".join([
        "NAME          FIX",
        "ROWS",
        fixed_line("N", "COST"),
        fixed_line("L", "LIM 1"),
        "COLUMNS",
        fixed_line("", "X ONE", "COST", "1.0", "LIM 1", "1.0"),
        "RHS",
        fixed_line("", "RHS", "LIM 1", "4.0"),
        "ENDATA",
    ])
    mip = parse_mps(text, fmt="fixed")
    assert mip.var_names == ("X ONE",)
    assert mip.row_names == ("LIM 1",)
    assert mip.rhs == (4.0,)
    assert parse_mps(text).var_names == ("X ONE",)  # auto falls back to fixed


def test_write_round_trip_knapsack():
    mip = read_mps(KNAPSACK)
    assert fields(parse_mps(write_mps(mip))) == fields(mip)


def test_round_trip_keeps_empty_columns():
    mip = MipInstance.from_dense([[1, 0]], [1], [0, 0])
    back = parse_mps(write_mps(mip))
    assert back.n == 2 and back.rows == mip.rows


values = st.sampled_from([0.0, 1.0, -1.0, 2.0, 0.5, -3.25, 1e-7])


@st.composite
def instances(draw):
    n = draw(st.integers(1, 4))
    m = draw(st.integers(1, 3))
    a = [[draw(values) for _ in range(n)] for _ in range(m)]
    b = [draw(values) for _ in range(m)]
    c = [draw(values) for _ in range(n)]
    sense = [draw(st.sampled_from(["<=", "=", ">="])) for _ in range(m)]
    lower = [draw(st.sampled_from([0.0, -1.0, -math.inf])) for _ in range(n)]
    upper = [draw(st.sampled_from([1.0, 4.0, math.inf])) for _ in range(n)]
    integer = [draw(st.booleans()) for _ in range(n)]
    return MipInstance.from_dense(a, b, c, sense=sense, lower=lower, upper=upper, is_integer=integer,
                                  objective_sense=draw(st.sampled_from(["min", "max"])))


@settings(max_examples=150, deadline=None)
@given(instances())
def test_write_parse_round_trip(mip):
    assert fields(parse_mps(write_mps(mip))) == fields(mip)
