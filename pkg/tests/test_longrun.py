import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panelclust.exceptions import BandwidthTooLarge, DegenerateDiagonal, InvalidConfig
from panelclust.longrun import (
    KernelSpec,
    bartlett_weight,
    cross_moments,
    longrun_matrix,
    pair_longrun,
    write_matrix,
)
from panelclust.regression import ScoreSeries

from oracles import naive_pair_longrun


def _rel(a, b):
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-300)


@pytest.mark.parametrize("h, L, expected", [(2, 4, 0.5), (0, 7, 1.0), (5, 4, 0.0), (4, 4, 0.0), (1, 3, 2 / 3)])
def test_bartlett_weight(h, L, expected):
    assert bartlett_weight(h, L) == pytest.approx(expected, abs=0)


def test_kernel_spec_checks():
    with pytest.raises(InvalidConfig):
        KernelSpec(-1)
    with pytest.raises(InvalidConfig):
        KernelSpec(2, kind="parzen")
    with pytest.raises(BandwidthTooLarge):
        pair_longrun(ScoreSeries(np.ones((2, 3, 1))), 0, 1, KernelSpec(3))


def test_lag_zero_is_cross_moment(rng):
    w = rng.standard_normal((3, 8, 2))
    block, total = pair_longrun(ScoreSeries(w), 0, 2, KernelSpec(0))
    np.testing.assert_allclose(block, w[0].T @ w[2] / 8, rtol=1e-14)
    assert total == pytest.approx(np.abs(block).sum())


def test_constant_scores():
    w = np.full((1, 10, 1), 3.0)
    _, total = pair_longrun(ScoreSeries(w), 0, 0, KernelSpec(0))
    assert total == pytest.approx(9.0)


def test_bandwidth_one_has_no_lag_terms(rng):
    w = rng.standard_normal((2, 9, 1))
    a, _ = pair_longrun(ScoreSeries(w), 0, 1, KernelSpec(1))
    b, _ = pair_longrun(ScoreSeries(w), 0, 1, KernelSpec(0))
    np.testing.assert_array_equal(a, b)


def test_example_instance_matches_oracle(rng):
    w = rng.standard_normal((3, 12, 2))
    for i in range(3):
        for j in range(3):
            block, total = pair_longrun(ScoreSeries(w), i, j, KernelSpec(3))
            ob, ot = naive_pair_longrun(w, i, j, 3)
            assert _rel(block, ob) < 1e-12
            assert total == pytest.approx(ot, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 5), T=st.integers(5, 16), p=st.integers(1, 2), L=st.integers(0, 4),
    seed=st.integers(0, 2**32 - 1),
)
def test_matrix_matches_oracle(n, T, p, L, seed):
    w = np.random.default_rng(seed).standard_normal((n, T, p))
    m = longrun_matrix(ScoreSeries(w), KernelSpec(L))
    blocks = cross_moments(w, KernelSpec(L))
    for i in range(n):
        for j in range(n):
            ob, ot = naive_pair_longrun(w, i, j, L)
            assert _rel(blocks[i, :, j, :], ob) < 1e-12
            assert m.sigma[i, j] == pytest.approx(ot, rel=1e-12)
    assert np.array_equal(m.sigma, m.sigma.T)
    assert np.array_equal(m.corr, m.corr.T)
    assert np.all(m.sigma >= 0) and np.all(m.corr >= 0)
    np.testing.assert_array_equal(np.diag(m.corr), 1.0)


def test_pair_swap_symmetric(rng):
    w = rng.standard_normal((2, 15, 2))
    _, a = pair_longrun(ScoreSeries(w), 0, 1, KernelSpec(4))
    _, b = pair_longrun(ScoreSeries(w), 1, 0, KernelSpec(4))
    assert a == pytest.approx(b, rel=1e-14)


def test_single_unit_and_identical_units(rng):
    w = rng.standard_normal((1, 10, 1))
    m = longrun_matrix(ScoreSeries(w), KernelSpec(2))
    np.testing.assert_array_equal(m.corr, [[1.0]])
    twin = np.concatenate([w, w])
    m2 = longrun_matrix(ScoreSeries(twin), KernelSpec(2))
    assert m2.corr[0, 1] == pytest.approx(1.0, abs=1e-14)


def test_degenerate_diagonal(rng):
    w = rng.standard_normal((3, 10, 1))
    w[1] = 0.0
    with pytest.raises(DegenerateDiagonal) as info:
        longrun_matrix(ScoreSeries(w), KernelSpec(2))
    assert info.value.unit == 1


def test_signed_corr_p1_matches_corr_up_to_sign(rng):
    w = rng.standard_normal((4, 20, 1))
    m = longrun_matrix(ScoreSeries(w), KernelSpec(3))
    np.testing.assert_allclose(np.abs(m.signed_corr), m.corr, rtol=1e-14)


def test_write_matrix_round_trip(rng):
    a = rng.standard_normal((3, 3))
    buf = io.StringIO()
    write_matrix(a, buf)
    back = np.loadtxt(io.StringIO(buf.getvalue()), delimiter=",")
    np.testing.assert_array_equal(back, a)
