import math

import numpy as np
import pytest
import sympy
from scipy import stats

from barrier_brw import RngStream
from barrier_brw.discrete import (
    OccupancyVector,
    estimate_discrete_survival,
    exact_critical,
    exact_critical_diagnostics,
    expected_count,
    expected_profile,
    phase_diagram,
    step_discrete,
    trinomial_row,
)
from barrier_brw.spectral import BandedToeplitz, dense_spectrum, perron


def test_trinomial_small_rows():
    assert trinomial_row(0).entries == (1,)
    assert trinomial_row(4).entries == (1, 4, 10, 16, 19, 16, 10, 4, 1)
    assert trinomial_row(4)[0] == 19 and trinomial_row(4)[5] == 0


def test_trinomial_matches_polynomial_expansion():
    x = sympy.symbols("x")
    for n in list(range(0, 30)) + [57, 120, 200]:
        coeffs = sympy.Poly(sympy.expand((1 + x + x**2) ** n), x).all_coeffs()[::-1]
        assert list(trinomial_row(n).entries) == [int(c) for c in coeffs]


@pytest.mark.parametrize("n", [1, 7, 50, 200, 1000])
def test_trinomial_identities(n):
    row = trinomial_row(n).entries
    assert row == row[::-1]
    assert sum(row) == 3**n
    assert len(row) == 2 * n + 1


def test_trinomial_rejects_negative():
    with pytest.raises(ValueError):
        trinomial_row(-1)


def test_expected_count_examples():
    assert expected_count(0, 0, 0.7) == 1.0
    assert expected_count(2, 0, 3.0) == pytest.approx(3.0, rel=1e-15)
    assert expected_count(3, 4, 1.0) == 0.0
    assert expected_count(6, 2, 1.3) == expected_count(6, -2, 1.3)


@pytest.mark.parametrize("n,lam", [(1, 1.0), (10, 1.2), (100, 0.9), (650, 1.01), (900, 1.0)])
def test_expected_count_sums_to_lambda_power(n, lam):
    assert math.fsum(expected_profile(n, lam)) == pytest.approx(lam**n, rel=1e-12)


def test_expected_count_large_n_finite():
    v = expected_count(2000, 0, 1.0)
    assert 0 < v < 1 and math.isfinite(v)


def _unbounded_batch(n, lam, replicas, seed):
    rng = RngStream(seed, 0)
    state = OccupancyVector.single(batch=(replicas,))
    for _ in range(n):
        state = step_discrete(state, lam, rng)
    return state


def test_expected_count_monte_carlo():
    n, lam, reps = 5, 1.2, 10**5
    w = _unbounded_batch(n, lam, reps, 7).at(2)
    se = w.std(ddof=1) / math.sqrt(reps)
    assert abs(w.mean() - expected_count(n, 2, lam)) <= 3 * se


@pytest.mark.parametrize("n", [1, 3, 8])
def test_mean_field_profile(n):
    lam, reps = 1.1, 40000
    state = _unbounded_batch(n, lam, reps, 100 + n)
    mean = state.counts.mean(axis=0)
    se = state.counts.std(axis=0, ddof=1) / math.sqrt(reps)
    exp = expected_profile(n, lam)
    # se can be zero only where the expectation is ~0 at the far edges
    tol = np.maximum(3 * se, 3 * np.sqrt(exp / reps))
    assert np.all(np.abs(mean - exp) <= tol)


def test_step_zero_state_is_absorbing(rng):
    for L in (None, 3):
        zero = OccupancyVector(np.zeros(7, dtype=int), L)
        out = step_discrete(zero, 2.0, rng)
        assert out.total() == 0


def test_step_unbounded_total_is_poisson():
    lam, reps = 1.4, 50000
    totals = _unbounded_batch(1, lam, reps, 3).total()
    top = 7
    observed = np.array([np.sum(totals == c) for c in range(top)] + [np.sum(totals >= top)])
    probs = np.append(stats.poisson.pmf(np.arange(top), lam), stats.poisson.sf(top - 1, lam))
    assert stats.chisquare(observed, probs * reps).pvalue > 0.001


def test_step_clips_at_barrier():
    lam, reps = 1.5, 10**5
    state = OccupancyVector.single(L=1, site=1, batch=(reps,))
    totals = step_discrete(state, lam, RngStream(5, 0)).total()
    se = totals.std(ddof=1) / math.sqrt(reps)
    assert abs(totals.mean() - 2 * lam / 3) <= 3 * se


def test_occupancy_validation():
    with pytest.raises(ValueError):
        OccupancyVector(np.zeros(4, dtype=int))
    with pytest.raises(ValueError):
        OccupancyVector(np.array([0, -1, 0]))
    with pytest.raises(ValueError):
        OccupancyVector(np.zeros(5, dtype=int), L=1)
    with pytest.raises(ValueError):
        OccupancyVector.single(L=2, site=3)


def test_exact_critical_examples():
    assert exact_critical(1) == pytest.approx(3 / (1 + math.sqrt(2)), abs=1e-12)
    assert exact_critical(1) == pytest.approx(1.242641, abs=1e-6)
    assert exact_critical(5) == pytest.approx(3 / (1 + 2 * math.cos(math.pi / 12)), abs=1e-12)
    assert exact_critical(5) == pytest.approx(1.0232442, abs=1e-6)
    with pytest.raises(ValueError):
        exact_critical(0)


@pytest.mark.parametrize("L", range(1, 21))
def test_exact_critical_against_numeric_spectrum(L):
    T = BandedToeplitz(2 * L + 1, 2)
    diag = exact_critical_diagnostics(L, validate=True)
    assert np.allclose(np.sort(diag.eigenvalues), dense_spectrum(T), atol=1e-9)
    assert abs(3 / perron(T, tolerance=1e-12, method="power").rho - diag.lambda_c) <= 1e-9
    j = np.arange(1, 2 * L + 2)
    ref = np.sin(j * np.pi / (2 * L + 2))
    v = diag.perron_vector
    assert np.all(v > 0)
    assert np.allclose(v, ref / np.linalg.norm(ref), atol=1e-8)


def test_printed_formula_kept_as_diagnostic():
    diag = exact_critical_diagnostics(1)
    assert diag.printed_formula == pytest.approx(3.0)
    assert diag.lambda_c < diag.printed_formula


def test_exact_critical_tends_to_one():
    vals = np.array([exact_critical(L) for L in range(1, 10001)])
    assert np.all(np.diff(vals) < 0) and np.all(vals > 1)
    assert vals[-1] - 1 < 1e-7


def test_phase_diagram():
    rows = phase_diagram(30)
    assert [L for L, _ in rows] == list(range(1, 31))
    vals = [v for _, v in rows]
    assert all(a > b for a, b in zip(vals, vals[1:])) and vals[-1] > 1
    for L, v in rows:
        assert abs(v - 3 / perron(BandedToeplitz(2 * L + 1, 2), tolerance=1e-12).rho) <= 1e-9


def test_discrete_survival_subcritical():
    est = estimate_discrete_survival(0.9 * exact_critical(5), 5, 2000, horizon=300, workers=1)
    assert est.proxy_survival_fraction < 0.02


def test_discrete_survival_supercritical():
    est = estimate_discrete_survival(1.5 * exact_critical(5), 5, 2000, workers=1)
    assert est.proxy_survival_fraction > 0.3


def test_discrete_near_critical_decays_with_horizon():
    lam = exact_critical(1)
    short = estimate_discrete_survival(lam, 1, 2000, horizon=300, workers=1)
    long = estimate_discrete_survival(lam, 1, 2000, horizon=600, workers=1)
    assert long.proxy_survival_fraction < short.proxy_survival_fraction


@pytest.mark.slow
@pytest.mark.parametrize("L", [1, 2, 3, 5, 10])
def test_discrete_threshold_consistency(L):
    lc = exact_critical(L)
    hi = estimate_discrete_survival(1.5 * lc, L, 1000, workers=1)
    lo = estimate_discrete_survival(0.9 * lc, L, 1000, workers=1)
    assert hi.proxy_survival_fraction - lo.proxy_survival_fraction >= 0.25


def test_discrete_replicas_reproducible():
    a = estimate_discrete_survival(1.3, 2, 50, horizon=40, seed=9, workers=1)
    b = estimate_discrete_survival(1.3, 2, 50, horizon=40, seed=9, workers=1)
    assert a == b
