import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vicsek.asymptotics import (
    arm_system,
    counting,
    counting_and_weyl,
    cosine_profile,
    cross_limit,
    cross_limit_check,
    decimation_level_one,
    first_positive_eigenvalue,
    fit_order,
    interval_comparison_check,
    low_eigenvalue_counts,
    normalized_weyl,
    plateau_bounds,
    plateau_counts,
    profile_deviation,
    psi_bounds,
    sine_profile,
    weyl_plateau_value,
    weyl_special_values,
    zero_series_polynomial,
)
from vicsek.decimation import enumerate_spectrum


@pytest.fixture(scope="module")
def table_n2():
    return enumerate_spectrum(2, 5)


def test_counting_function_steps(table_n2):
    lam = table_n2.values[5]
    assert counting(table_n2, lam) == table_n2.cumulative[5]
    assert counting(table_n2, lam, left=True) == table_n2.cumulative[4]
    assert counting(table_n2, 0.0) == 1
    with pytest.raises(ValueError):
        counting(table_n2, 10 * table_n2.upper_value)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.0, 1e5), b=st.floats(0.0, 1e5))
def test_counting_is_monotone(a, b):
    table = enumerate_spectrum(2, 5)
    lo, hi = sorted((a, b))
    assert counting(table, lo) <= counting(table, hi)


def test_weyl_samples(table_n2):
    samples = counting_and_weyl(table_n2, [10.0, 100.0])
    assert samples[0].count == counting(table_n2, 10.0)
    assert samples[1].ratio == pytest.approx(samples[1].count / 100.0 ** (math.log(5) / math.log(15)))
    assert first_positive_eigenvalue(2) == pytest.approx(2.6018108671038007, rel=1e-12)


@pytest.mark.parametrize("n,j,k", [(2, 1, 0), (2, 1, 1), (2, 1, 2), (3, 1, 1), (3, 2, 1), (3, 2, 2)])
def test_counting_identities_at_low_eigenvalues(n, j, k):
    c = low_eigenvalue_counts(n, j, k)
    assert c["N_odd"] == c["N_odd_expected"]
    assert c["N_odd_left"] == c["N_odd_left_expected"]
    assert c["N_even"] == c["N_even_expected"]
    assert c["mult_odd"] == c["mult_odd_expected"]


def test_plateau_counts():
    for k in range(3):
        low, top, expected = plateau_counts(2, k)
        assert low == top == expected


def test_weyl_jump_at_zero_is_three():
    b = plateau_bounds(2)
    assert b["w0"] / b["w0_minus"] == 3.0
    assert b["left"] < 0 < b["right"]
    assert weyl_plateau_value(2, 0.0) == pytest.approx(1.6994805336770644, rel=1e-12)


def test_plateau_formula_agrees_with_counting(table_n2):
    for s in (0.0, 0.05, 0.2):
        (_, w), = normalized_weyl(table_n2, [s])
        assert w == pytest.approx(weyl_plateau_value(2, s), rel=5e-3)
    with pytest.raises(ValueError):
        weyl_plateau_value(2, 0.9)


def test_weyl_value_for_large_n_near_limit():
    value = plateau_bounds(32)["w0"]
    assert value == pytest.approx(1.5873377176642594, rel=1e-9)
    assert abs(value / (3 * math.sqrt(3) / math.pi) - 1) < 0.05


def test_special_values_ordering():
    v = weyl_special_values(3, 1)
    assert v["lambda_odd"] < v["lambda_even"]
    assert v["w_at"] / v["w_left"] == pytest.approx(3.0)
    with pytest.raises(ValueError):
        weyl_special_values(3, 3)


@pytest.mark.parametrize("n", [2, 3, 5, 8, 16])
@pytest.mark.parametrize("series", ["zero", "fourthirds"])
def test_arm_system_matches_decimation(n, series):
    sol = arm_system(n, series)
    np.testing.assert_allclose(sol.eigenvalues, decimation_level_one(n, series), atol=1e-9)


def test_fourthirds_arm_vectors_are_sine_profiles():
    for n in (4, 8):
        sol = arm_system(n, "fourthirds")
        for j in range(1, n):
            assert profile_deviation(sol.vectors[:, j - 1], sine_profile(n, j)) < 1e-10


def test_profiles_have_unit_peak():
    assert np.max(np.abs(sine_profile(6, 2))) <= 1.0
    assert np.max(np.abs(cosine_profile(6, 1))) <= 1.0


def test_zero_series_polynomial_vanishes_at_level_one_values():
    for lam in decimation_level_one(4, "zero")[1:]:
        assert abs(zero_series_polynomial(lam, 4)) < 1e-8


def test_cross_limits():
    assert cross_limit(1, "fourthirds") == pytest.approx(math.pi**2 / 3)
    assert cross_limit(1, "zero") == 0.0
    with pytest.raises(ValueError):
        cross_limit(1, "other")


def test_cross_limit_errors_decrease_with_n():
    table = cross_limit_check(1, "fourthirds", [8, 16, 32, 64])
    assert table.decreasing
    # the fractal eigenvalue approaches its limit only at first order in 1/n
    assert table.order == pytest.approx(1.05, abs=0.05)


def test_level_one_interval_comparison_is_third_order():
    table = interval_comparison_check(2, "zero", [8, 16, 32, 64])
    assert table.decreasing
    assert 2.5 <= table.order <= 3.5
    exact = interval_comparison_check(1, "fourthirds", [8, 16])
    assert max(row[3] for row in exact.rows) < 1e-14


def test_fit_order_on_synthetic_data():
    ns = np.array([4.0, 8.0, 16.0])
    assert fit_order(ns, 7 * ns**-2.0) == pytest.approx(2.0)


def test_psi_lower_bound():
    out = psi_bounds([2, 3])
    assert out[2]["above_identity"] and out[3]["above_identity"]
    assert out[2]["c"] == pytest.approx(0.4061947477147465, rel=1e-6)
