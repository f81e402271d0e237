import math
import time

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from barrier_brw import (
    BandedToeplitz,
    ConvergenceError,
    bounds_table,
    courant_fischer_check,
    lambda_c_x,
    lambda_c_z,
    matvec,
    perron,
)
from barrier_brw.spectral import dense_spectrum

from conftest import PUBLISHED_X, PUBLISHED_Z


def naive_matvec(k, d, v):
    # O(k*d) shifted-diagonal sum, independent of the prefix-sum route.
    out = np.zeros(k)
    for off in range(-(d - 1), d):
        if off >= 0:
            out[: k - off] += v[off:]
        else:
            out[-off:] += v[: k + off]
    return out


def oracle_rho(k, d):
    col = np.zeros(k)
    col[:d] = 1.0
    return scipy.linalg.eigh(scipy.linalg.toeplitz(col), eigvals_only=True)[-1]


def test_t63_matches_displayed_matrix():
    expected = np.array([
        [1, 1, 1, 0, 0, 0],
        [1, 1, 1, 1, 0, 0],
        [1, 1, 1, 1, 1, 0],
        [0, 1, 1, 1, 1, 1],
        [0, 0, 1, 1, 1, 1],
        [0, 0, 0, 1, 1, 1],
    ])
    assert np.array_equal(BandedToeplitz(6, 3).todense(), expected)


@pytest.mark.parametrize("k,d", [(0, 1), (3, 0), (3, 4)])
def test_invalid_shapes(k, d):
    with pytest.raises(ValueError):
        BandedToeplitz(k, d)


def test_identity_bandwidth(rng):
    v = rng.generator.standard_normal(17)
    assert np.array_equal(matvec(BandedToeplitz(17, 1), v), v)


def test_t63_times_ones():
    assert matvec(BandedToeplitz(6, 3), np.ones(6)).tolist() == [3, 4, 5, 5, 4, 3]


def test_matvec_dimension_mismatch():
    with pytest.raises(ValueError):
        matvec(BandedToeplitz(5, 2), np.ones(4))


def test_matvec_large_matches_naive(rng):
    k, d = 2**13, 2**12
    v = rng.generator.standard_normal(k)
    fast = matvec(BandedToeplitz(k, d), v)
    slow = naive_matvec(k, d, v)
    assert np.max(np.abs(fast - slow)) <= 1e-9 * np.max(np.abs(slow))


def test_matvec_blocked_prefix_path(rng):
    # k above the blocked-prefix threshold
    k, d = 2**17 + 5, 300
    v = rng.generator.standard_normal(k)
    assert np.allclose(matvec(BandedToeplitz(k, d), v), naive_matvec(k, d, v), rtol=1e-11, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40).flatmap(lambda k: st.tuples(st.just(k), st.integers(1, k))))
def test_matvec_matches_dense(kd):
    k, d = kd
    v = np.random.default_rng(k * 100 + d).standard_normal(k)
    T = BandedToeplitz(k, d)
    assert np.allclose(matvec(T, v), T.todense() @ v, rtol=1e-13, atol=1e-13)


def test_perron_trivial():
    assert perron(BandedToeplitz(1, 1)).rho == pytest.approx(1.0, abs=1e-12)


def test_perron_t32_characteristic_polynomial():
    # det(T - x I) = (1 - x)^3 - 2 (1 - x); largest root 1 + sqrt(2).
    roots = np.roots(np.poly(BandedToeplitz(3, 2).todense()))
    assert max(roots.real) == pytest.approx(1 + math.sqrt(2), abs=1e-12)
    assert perron(BandedToeplitz(3, 2)).rho == pytest.approx(1 + math.sqrt(2), abs=1e-9)


def test_perron_t42():
    res = perron(BandedToeplitz(4, 2))
    assert res.rho == pytest.approx(oracle_rho(4, 2), abs=1e-9)
    assert res.rho == pytest.approx(2.618034, abs=1e-6)
    assert 4 / res.rho == pytest.approx(1.527864, abs=1e-6)


def test_power_iteration_matches_dense_oracle_all_small():
    for k in range(1, 65):
        for d in range(1, k + 1):
            T = BandedToeplitz(k, d)
            res = perron(T, method="power")
            assert abs(res.rho - dense_spectrum(T)[-1]) < 1e-8, (k, d)


@pytest.mark.parametrize("k", [2, 3, 5, 10, 33, 64])
def test_power_iteration_tridiagonal_closed_form(k):
    res = perron(BandedToeplitz(k, 2), method="power")
    assert abs(res.rho - (1 + 2 * math.cos(math.pi / (k + 1)))) < 1e-9


@pytest.mark.parametrize("k", [65, 100, 257, 1000, 2500, 5000, 10**4])
def test_tridiagonal_closed_form_large(k):
    res = perron(BandedToeplitz(k, 2))
    assert abs(res.rho - (1 + 2 * math.cos(math.pi / (k + 1)))) < 1e-9
    assert res.residual <= 1e-10
    assert np.all(res.vector > 0)


def test_bisection_agrees_with_power_on_overlap():
    for k in (4, 20, 64):
        a = perron(BandedToeplitz(k, 2), method="bisection")
        b = perron(BandedToeplitz(k, 2), method="power")
        assert abs(a.rho - b.rho) < 1e-9
        assert np.allclose(a.vector, b.vector, atol=1e-6)


def test_bisection_rejects_wide_band():
    with pytest.raises(ValueError):
        perron(BandedToeplitz(10, 3), method="bisection")


def test_convergence_failure_carries_last_iterate():
    with pytest.raises(ConvergenceError) as info:
        perron(BandedToeplitz(200, 2), method="power", max_iterations=5)
    assert info.value.last.iterations == 5
    assert info.value.last.vector.shape == (200,)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 64).flatmap(lambda k: st.tuples(st.just(k), st.integers(1, k))))
def test_perron_result_invariants(kd):
    k, d = kd
    T = BandedToeplitz(k, d)
    res = perron(T)
    assert np.all(res.vector > 0)
    assert abs(np.linalg.norm(res.vector) - 1) < 1e-12
    assert res.residual <= 1e-10
    assert np.max(np.abs(matvec(T, res.vector) - res.rho * res.vector)) <= 1e-10
    assert np.allclose(res.vector, res.vector[::-1], atol=1e-8)
    # min/max row sums bracket the Perron root
    rs = T.row_sums()
    assert rs.min() - 1e-9 <= res.rho <= rs.max() + 1e-9
    assert 1 - 1e-9 <= res.rho <= 2 * d - 1 + 1e-9
    if d < k:
        assert perron(BandedToeplitz(k, d + 1)).rho >= res.rho - 1e-9


@pytest.mark.parametrize("m", [1, 6, 12])
def test_lambda_c_x_reference(m):
    assert abs(lambda_c_x(m) - PUBLISHED_X[m - 1]) <= 1e-6


@pytest.mark.parametrize("m", [1, 5, 12])
def test_lambda_c_z_reference(m):
    assert abs(lambda_c_z(m) - PUBLISHED_Z[m - 1]) <= 1e-6


@pytest.mark.parametrize("m", [0, -1, 1.5])
def test_lambda_c_rejects_bad_level(m):
    with pytest.raises(ValueError):
        lambda_c_x(m)


def test_bounds_table_invariants():
    rows = bounds_table(12)
    assert [r.m for r in rows] == list(range(1, 13))
    for r in rows:
        assert r.lambda_z <= r.lambda_x
        assert r.gap >= 0
    for a, b in zip(rows, rows[1:]):
        assert b.lambda_x <= a.lambda_x
        assert b.lambda_z >= a.lambda_z
    for a, b in zip(rows[3:], rows[4:]):
        assert 0.45 <= b.gap / a.gap <= 0.55


def test_courant_fischer_m1_witnesses():
    res = courant_fischer_check(1)
    assert res.rho_z == pytest.approx(oracle_rho(4, 3), abs=1e-9)
    assert res.rho_x == pytest.approx(oracle_rho(4, 2), abs=1e-9)
    assert res.difference == pytest.approx(0.943519, abs=1e-6)
    assert res.holds and bool(res)


def test_difference_matrix_is_symmetric_permutation():
    for m in range(1, 6):
        k = 2 ** (m + 1)
        A = BandedToeplitz(k, 2**m + 1).todense() - BandedToeplitz(k, 2**m).todense()
        assert np.array_equal(A, A.T)
        assert np.all(A.sum(axis=0) == 1) and np.all(A.sum(axis=1) == 1)
        assert np.linalg.eigvalsh(A).min() == pytest.approx(-1.0)


def _best_time(fn, repeats=7):
    best = math.inf
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def test_matvec_scales_linearly(rng):
    k = 2**21
    v1 = rng.generator.standard_normal(k)
    v2 = rng.generator.standard_normal(2 * k)
    T1, T2 = BandedToeplitz(k, 2**12), BandedToeplitz(2 * k, 2**12)
    matvec(T1, v1)
    t1 = _best_time(lambda: matvec(T1, v1))
    t2 = _best_time(lambda: matvec(T2, v2))
    assert t2 / t1 <= 2.5
