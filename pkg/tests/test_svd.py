import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tricompress.svd import (
    KSelection,
    SizeModel,
    SvdFactors,
    mae,
    reconstruct,
    select_k_for_ratio,
    singular_values,
    storage_entries,
    svd,
    truncate,
)

from oracles import leading_singular_vectors_2x2, svd_2x2

RANK1 = np.array([[1.0, 2.0], [2.0, 4.0]])


def _check_invariants(f: SvdFactors):
    assert np.all(f.sigma >= 0)
    assert np.all(np.diff(f.sigma) <= 0)
    k = f.k
    assert np.abs(f.u.T @ f.u - np.eye(k)).max() <= 1e-8
    assert np.abs(f.v.T @ f.v - np.eye(k)).max() <= 1e-8
    idx = np.argmax(np.abs(f.u), axis=0)
    assert np.all(f.u[idx, np.arange(k)] >= 0)


def test_diagonal():
    f = svd(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(f.sigma, [3, 1])
    np.testing.assert_allclose(f.u, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(f.v, np.eye(2), atol=1e-15)


def test_diagonal_out_of_order_is_sorted():
    f = svd(np.diag([1.0, 5.0, 3.0]))
    np.testing.assert_allclose(f.sigma, [5, 3, 1])
    _check_invariants(f)


def test_rank_one_against_closed_form():
    s1, s2 = svd_2x2(1, 2, 2, 4)
    (u0, u1), (v0, v1) = leading_singular_vectors_2x2(1, 2, 2, 4)
    assert (s1, s2) == (5.0, 0.0)
    f = svd(RANK1)
    np.testing.assert_allclose(f.sigma, [s1, s2], atol=1e-14)
    # sign convention: largest |entry| of u_1 is positive
    sign = 1.0 if max((u0, u1), key=abs) > 0 else -1.0
    np.testing.assert_allclose(f.u[:, 0], sign * np.array([u0, u1]), atol=1e-14)
    np.testing.assert_allclose(f.v[:, 0], sign * np.array([v0, v1]), atol=1e-14)
    np.testing.assert_allclose(f.u[:, 0], np.array([1, 2]) / math.sqrt(5), atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_random_2x2_against_closed_form(seed):
    x = np.random.default_rng(seed).standard_normal((2, 2))
    expected = svd_2x2(*x.ravel())
    np.testing.assert_allclose(svd(x).sigma, expected, rtol=1e-12, atol=1e-14)


def test_orthogonal_input_has_unit_singular_values():
    q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((7, 7)))
    np.testing.assert_allclose(svd(q).sigma, np.ones(7), atol=1e-13)


@pytest.mark.parametrize("shape", [(1, 1), (1, 9), (9, 1), (5, 5), (30, 8), (8, 30), (60, 200)])
def test_matches_lapack_oracle(shape):
    x = np.random.default_rng(sum(shape)).standard_normal(shape)
    f = svd(x)
    ref = np.linalg.svd(x, compute_uv=False)
    np.testing.assert_allclose(f.sigma, ref, rtol=1e-12, atol=1e-12 * ref[0])
    _check_invariants(f)
    err = np.linalg.norm(reconstruct(f).values - x) / np.linalg.norm(x)
    assert err <= 1e-9


def test_rank_deficient_and_repeated_values():
    rng = np.random.default_rng(7)
    low = rng.standard_normal((40, 4)) @ rng.standard_normal((4, 70))
    f = svd(low)
    _check_invariants(f)
    assert np.all(f.sigma[4:] <= 1e-12 * f.sigma[0])
    x = np.kron(np.eye(3), np.ones((2, 2)))  # sigma = 2,2,2,0,0,0
    f = svd(x)
    np.testing.assert_allclose(f.sigma, [2, 2, 2, 0, 0, 0], atol=1e-14)
    _check_invariants(f)


def test_zero_matrix_yields_zero_spectrum():
    f = svd(np.zeros((3, 4)))
    np.testing.assert_array_equal(f.sigma, np.zeros(3))
    _check_invariants(f)


def test_graded_matrix():
    x = np.diag(10.0 ** -np.arange(0, 16, 1.5)) @ np.random.default_rng(1).standard_normal((11, 11))
    f = svd(x)
    _check_invariants(f)
    assert np.linalg.norm(reconstruct(f).values - x) <= 1e-13 * np.linalg.norm(x)


def test_singular_values_only_matches_full():
    x = np.random.default_rng(9).standard_normal((25, 13))
    np.testing.assert_allclose(singular_values(x), svd(x).sigma, rtol=1e-13)


def test_deterministic_bits():
    x = np.random.default_rng(11).standard_normal((33, 47))
    a, b = svd(x), svd(x.copy())
    for name in ("u", "sigma", "v"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_truncate():
    f = svd(np.random.default_rng(2).standard_normal((6, 9)))
    assert truncate(f, f.k) is f
    t1 = truncate(f, 1)
    assert t1.k == 1 and t1.sigma.tolist() == [f.sigma[0]]
    for bad in (0, f.k + 1):
        with pytest.raises(ValueError):
            truncate(f, bad)


def test_truncate_rank_one_reconstructs_exactly():
    rec = reconstruct(truncate(svd(RANK1), 1))
    np.testing.assert_allclose(rec.values, RANK1, atol=1e-14)


def test_reconstruct_zero_sigma():
    f = SvdFactors(np.eye(3, 2), np.zeros(2), np.eye(4, 2))
    np.testing.assert_array_equal(reconstruct(f).values, np.zeros((3, 4)))


def test_factor_shape_validation():
    with pytest.raises(ValueError):
        SvdFactors(np.eye(3, 2), np.ones(3), np.eye(4, 2))
    with pytest.raises(ValueError):
        SvdFactors(np.zeros((3, 0)), np.zeros(0), np.zeros((4, 0)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 25), st.integers(1, 25), st.integers(0, 2**32 - 1))
def test_eckart_young_and_monotone_frobenius(m, t, seed):
    x = np.random.default_rng(seed).standard_normal((m, t))
    f = svd(x)
    total = float(np.sum(x * x))
    prev = math.inf
    for k in range(1, f.k + 1):
        resid = np.linalg.norm(x - reconstruct(truncate(f, k)).values)
        tail = float(np.sum(f.sigma[k:] ** 2))
        assert abs(resid**2 - tail) <= 1e-8 * total
        assert resid <= prev + 1e-12 * math.sqrt(total)
        prev = resid
        # Cauchy-Schwarz: mean |r| <= ||r||_F / sqrt(mt)
        assert mae(x, reconstruct(truncate(f, k))) <= resid / math.sqrt(m * t) + 1e-15


def test_storage_entries():
    assert storage_entries(80, 4902, 10) == 49830
    assert storage_entries(2, 2, 1) == 5
    with pytest.raises(ValueError):
        storage_entries(0, 2, 1)


@settings(max_examples=100)
@given(st.integers(1, 10**5), st.integers(1, 10**5), st.integers(1, 500))
def test_storage_entries_matches_literal_sum(m, t, k):
    assert storage_entries(m, t, k) == m * k + k + t * k
    # compression happens exactly when the factors are smaller than X
    assert (storage_entries(m, t, k) < m * t) == ((m + 1 + t) * k < m * t)


def test_select_k_entry_count_example():
    sel = select_k_for_ratio((100, 1000), 25, rank=100)
    assert sel == KSelection(3, 100000 / 3303, False)
    assert 100000 / 4404 < 25


def test_select_k_ratio_strictly_decreasing():
    ratios = [select_k_for_ratio((100, 1000), 1.0001, rank=k).achieved_ratio for k in range(1, 50)]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))


def test_select_k_capped_by_rank_and_unreachable():
    x = np.outer(np.arange(1.0, 11.0), np.arange(1.0, 21.0))
    sel = select_k_for_ratio(x, 1.5)
    assert sel.k == 1 and not sel.best_effort
    sel = select_k_for_ratio(x, 1000)
    assert sel.k == 1 and sel.best_effort
    assert sel.achieved_ratio == pytest.approx(200 / 31)


def test_select_k_measured_bytes_is_largest_passing_k():
    # deliberately non-monotone ratio curve
    curve = {1: 30.0, 2: 10.0, 3: 20.0, 4: 5.0}
    sel = select_k_for_ratio((10, 10), 15, SizeModel.MEASURED_BYTES, rank=4, ratio_at=curve.get)
    assert sel.k == 3
    with pytest.raises(ValueError):
        select_k_for_ratio((10, 10), 15, SizeModel.MEASURED_BYTES, rank=4)


def test_select_k_rejects_ratio_at_most_one():
    with pytest.raises(ValueError):
        select_k_for_ratio((10, 10), 1.0, rank=3)


def test_mae():
    x = np.random.default_rng(0).random((3, 4))
    assert mae(x, x) == 0.0
    assert mae(np.ones((2, 2)), np.zeros((2, 2))) == 1.0
    with pytest.raises(ValueError):
        mae(np.ones((2, 2)), np.ones((2, 3)))


def test_mae_not_asserted_monotone_but_observed():
    # raw MAE over k is reported, not guaranteed; Frobenius is what decreases
    x = np.random.default_rng(5).standard_normal((12, 20))
    f = svd(x)
    maes = [mae(x, reconstruct(truncate(f, k))) for k in range(1, f.k + 1)]
    assert maes[-1] < 1e-12 and maes[0] > maes[-1]
