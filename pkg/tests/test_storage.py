import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from brinkve.errors import FormatError
from brinkve.storage import read_field, read_table, write_field, write_table

fields = arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                elements=st.floats(allow_nan=False, allow_infinity=False))


@given(fields, st.floats(0, 10))
def test_field_round_trip_is_bitwise(tmp_path_factory, values, time):
    path = tmp_path_factory.mktemp("f") / "S.csv"
    write_field(values, path, time)
    out, t = read_field(path)
    assert out.tobytes() == values.tobytes()
    assert t == time


def test_random_field_round_trip(tmp_path):
    values = np.random.default_rng(0).standard_normal((7, 5)) * 1e-7
    write_field(values, tmp_path / "S.csv", 0.125)
    out, t = read_field(tmp_path / "S.csv")
    assert out.tobytes() == values.tobytes() and t == 0.125


def test_layout(tmp_path):
    values = np.arange(6.0).reshape(3, 2)
    write_field(values, tmp_path / "S.csv", 0.5)
    lines = (tmp_path / "S.csv").read_text().splitlines()
    assert lines[0] == "# format=1 nx=3 nz=2 time=0.5"
    # bottom row first, x varies along a row
    assert lines[1:] == ["0,2,4", "1,3,5"]


def test_single_cell_two_lines(tmp_path):
    write_field(np.zeros((1, 1)), tmp_path / "S.csv")
    assert (tmp_path / "S.csv").read_text().splitlines() == ["# format=1 nx=1 nz=1 time=0.0", "0"]


@pytest.mark.parametrize("body, line", [
    ("# format=1 nx=3 nz=2 time=0\n1,2\n3,4,5\n", 2),
    ("# format=1 nx=2 nz=2 time=0\n1,2\n3,4,5\n", 3),
    ("# format=1 nx=2 nz=3 time=0\n1,2\n3,4\n", 4),
    ("# format=1 nx=2 nz=1 time=0\n1,x\n", 2),
    ("nx=2 nz=1\n1,2\n", 1),
    ("# format=1 nz=1\n1\n", 1),
    ("# format=2 nx=1 nz=1\n1\n", 1),
    ("# format=1 nx=1 nz=1 bogus\n1\n", 1),
    ("", 1),
])
def test_malformed_fields(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(FormatError) as err:
        read_field(path)
    assert err.value.line == line
    assert str(err.value).startswith(f"line {line}:")


def test_table_round_trip(tmp_path):
    rows = [{"gamma": 1.0, "e": 0.1 + 0.2, "n": 3}, {"gamma": 0.2, "e": 1e-17, "n": 0}]
    write_table(tmp_path / "t.csv", ("gamma", "e", "n"), rows, monotone=1)
    meta, back = read_table(tmp_path / "t.csv")
    assert meta == {"format": "1", "monotone": "1"}
    assert back == [{"gamma": 1.0, "e": 0.1 + 0.2, "n": 3.0}, {"gamma": 0.2, "e": 1e-17, "n": 0.0}]
    assert (tmp_path / "t.csv").read_text().splitlines()[1] == "gamma,e,n"


def test_table_errors(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("# format=1\na,b\n1,2\n3\n")
    with pytest.raises(FormatError) as err:
        read_table(path)
    assert err.value.line == 4
