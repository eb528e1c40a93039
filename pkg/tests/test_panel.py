import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panelclust.exceptions import (
    DuplicateObservation,
    MissingCell,
    NonFiniteValue,
    SchemaMismatch,
    ShapeMismatch,
)
from panelclust.panel import DataSchema, PanelData, dump_panel, from_arrays, load_panel

from conftest import random_panel

CSV = "unit,time,y,x1\na,1,1.0,0.5\na,2,2.0,0.1\na,3,3.0,0.2\nb,1,4.0,0.3\nb,2,5.0,0.4\nb,3,6.0,0.6\n"
SCHEMA = DataSchema("unit", "time", "y", ("x1",))


def test_load_balanced():
    panel = load_panel(io.StringIO(CSV), SCHEMA)
    assert (panel.n_units, panel.n_periods, panel.n_covariates) == (2, 3, 1)
    assert panel.unit_ids == ("a", "b")
    np.testing.assert_array_equal(panel.y, [[1, 2, 3], [4, 5, 6]])


def test_load_unbalanced_names_unit():
    text = "\n".join(CSV.splitlines()[:-1]) + "\n"
    with pytest.raises(MissingCell, match="'b'"):
        load_panel(io.StringIO(text), SCHEMA)


def test_intercept_prepends_constant():
    panel = load_panel(io.StringIO(CSV), DataSchema("unit", "time", "y", ("x1",), intercept=True))
    assert panel.n_covariates == 2
    assert np.all(panel.x[:, :, 0] == 1.0)
    assert panel.covariate_names == ("const", "x1")


def test_bytes_and_tab_delimiter():
    panel = load_panel(CSV.replace(",", "\t").encode(), SCHEMA, delimiter="\t")
    assert panel.n_periods == 3


@pytest.mark.parametrize(
    "text, exc",
    [
        (CSV + "a,1,9.0,0.0\n", DuplicateObservation),
        (CSV.replace("2.0,0.1", "nan,0.1"), NonFiniteValue),
        (CSV.replace("x1", "z"), SchemaMismatch),
        (CSV.replace("2.0,0.1", "oops,0.1"), SchemaMismatch),
        (CSV.replace("2.0,0.1", ",0.1"), MissingCell),
        ("", SchemaMismatch),
    ],
)
def test_load_errors(text, exc):
    with pytest.raises(exc):
        load_panel(io.StringIO(text), SCHEMA)


def test_row_order_irrelevant_and_time_ranked():
    lines = CSV.splitlines()
    shuffled = "\n".join([lines[0], *reversed(lines[1:])]) + "\n"
    a = load_panel(io.StringIO(CSV), SCHEMA)
    b = load_panel(io.StringIO(shuffled), SCHEMA)
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.x, b.x)
    assert b.time_labels == ("1", "2", "3")


def test_numeric_labels_sort_numerically():
    text = "unit,time,y,x1\n" + "".join(f"{u},{t},1,{t}\n" for u in (10, 9) for t in (10, 2, 1))
    panel = load_panel(io.StringIO(text), SCHEMA)
    assert panel.unit_ids == ("9", "10")
    np.testing.assert_array_equal(panel.x[0, :, 0], [1, 2, 10])


def test_from_arrays_shapes():
    panel = from_arrays(np.zeros((3, 5)), np.zeros((3, 5, 2)))
    assert (panel.n_units, panel.n_periods, panel.n_covariates) == (3, 5, 2)
    with pytest.raises(ShapeMismatch):
        from_arrays(np.zeros((3, 5)), np.zeros((3, 4, 2)))
    y = np.zeros((3, 5))
    y[1, 2] = np.nan
    with pytest.raises(NonFiniteValue):
        from_arrays(y, np.zeros((3, 5, 2)))


def test_invariants():
    with pytest.raises(ShapeMismatch):
        from_arrays(np.zeros((2, 1)), np.zeros((2, 1, 1)))
    with pytest.raises(ValueError):
        from_arrays(np.zeros((2, 3)), np.zeros((2, 3, 1)), unit_ids=["a", "a"])


def test_panel_is_immutable(rng):
    panel = random_panel(rng)
    with pytest.raises(ValueError):
        panel.y[0, 0] = 1.0


def test_schema_parse():
    s = DataSchema.parse("id, t, out, x1, x2", intercept=True)
    assert s == DataSchema("id", "t", "out", ("x1", "x2"), True)
    with pytest.raises(SchemaMismatch):
        DataSchema.parse("id,t")
    with pytest.raises(SchemaMismatch):
        DataSchema.parse("id,t,y")


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 4), T=st.integers(2, 6), p=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
def test_round_trip(n, T, p, seed):
    rng = np.random.default_rng(seed)
    panel = from_arrays(rng.standard_normal((n, T)) * 1e3, rng.standard_normal((n, T, p)))
    buf = io.StringIO()
    dump_panel(panel, buf)
    schema = DataSchema("unit", "time", "y", panel.covariate_names)
    back = load_panel(io.StringIO(buf.getvalue()), schema)
    np.testing.assert_array_equal(back.y, panel.y)
    np.testing.assert_array_equal(back.x, panel.x)
    assert isinstance(back, PanelData)


def test_subset_and_slice(rng):
    panel = random_panel(rng, n=4, T=6)
    sub = panel.subset_units([2, 0])
    np.testing.assert_array_equal(sub.y, panel.y[[2, 0]])
    sl = panel.slice_periods(1, 4)
    assert sl.n_periods == 3
