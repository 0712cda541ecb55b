import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vicsek.decimation import (
    FOUR_THIRDS,
    ForbiddenEigenvalueError,
    Series,
    brute_enumerate,
    decimation_system,
    enumerate_spectrum,
    extension_coefficients,
    fourthirds_multiplicity,
    graph_eigenvalue_sequence,
    make_record,
    spectrum_at_level,
    trim_word,
    word_admissible,
)
from vicsek.vsgraph import cached_graph, group_eigenvalues, oracle_spectrum


def test_exact_polynomials_for_n2():
    polys = decimation_system(2).exact_polys
    assert polys["R"] == [0, 15, -48, 36]
    assert polys["l"] == [Fraction(-1), Fraction(6)]


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_degree_and_special_values(n):
    sys = decimation_system(n)
    r = sys.exact_polys["R"]
    assert len(r) - 1 == 2 * n - 1
    assert r[1] == sys.rho  # R'(0) = ρ
    assert sys.R(0.0) == 0.0
    assert len(sys.critical_points) == 2 * n - 2


def test_known_branch_values():
    sys = decimation_system(2)
    assert sys.branch(1, FOUR_THIRDS) == pytest.approx(1 / 6, abs=1e-13)
    assert sys.branch(3, 0.0) == pytest.approx(5 / 6, abs=1e-13)
    assert sys.R(FOUR_THIRDS) == pytest.approx(20.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 8), frac=st.floats(0.0, 1.0), data=st.data())
def test_branches_invert_r(n, frac, data):
    sys = decimation_system(n)
    j = data.draw(st.integers(1, 2 * n - 1))
    lo, hi = sys.branch_range(j)
    mu = min(lo + frac * (hi - lo), FOUR_THIRDS)
    x = sys.branch(j, mu)
    # rounding in x and in the evaluation of R bounds the achievable residual
    coeffs = [float(c) for c in sys.exact_polys["R"]]
    scale = sum(abs(c) * abs(x) ** k for k, c in enumerate(coeffs))
    slope = sum(k * abs(c) * abs(x) ** (k - 1) for k, c in enumerate(coeffs) if k)
    eps = np.finfo(float).eps
    assert abs(sys.R(x) - mu) <= 16 * eps * (scale + slope * abs(x) + abs(mu)) + np.finfo(float).tiny
    a, b = sys.branch_brackets[j - 1]
    assert a - 1e-15 <= x <= b + 1e-15


@settings(max_examples=30, deadline=None)
@given(t=st.floats(1e-6, FOUR_THIRDS))
def test_psi_is_conjugated_by_the_first_branch(t):
    sys = decimation_system(2)
    assert sys.psi(sys.branch(1, t)) * sys.rho == pytest.approx(sys.psi(t), rel=1e-11)
    assert sys.psi(t) >= t


def test_branch_rejects_out_of_range_argument():
    sys = decimation_system(2)
    with pytest.raises(ValueError):
        sys.branch(1, 25.0)
    with pytest.raises(ValueError):
        sys.branch(4, 0.5)


def test_forbidden_set_n2():
    vals = decimation_system(2).forbidden_set()
    np.testing.assert_allclose(vals, [0.239741197865195, 0.5, 0.9269254688014716, 4 / 3], rtol=1e-12)
    assert 0.0 not in vals


def test_psi_frozen_values():
    sys = decimation_system(2)
    assert sys.psi(FOUR_THIRDS) == pytest.approx(2.6018108671038007, rel=1e-12)
    assert sys.psi(0.5) == pytest.approx(0.5714940275922771, rel=1e-12)
    assert sys.psi(0.0) == 0.0


def test_fixed_points_n2():
    p, q, t = decimation_system(2).fixed_points()
    assert t == pytest.approx(0.9023689270621825, rel=1e-12)
    assert q == pytest.approx(0.9269254688014716, rel=1e-12)
    assert p <= q


def test_extension_matrix_matches_closed_form():
    sys = decimation_system(2)
    for lam in (0.05, 0.3, 0.7, 1.1):
        np.testing.assert_allclose(sys.extension_matrix(lam), sys.extension_matrix_closed_form(lam), atol=1e-12)


def test_extension_matrix_refuses_forbidden_values():
    sys = decimation_system(2)
    with pytest.raises(ForbiddenEigenvalueError):
        sys.extension_matrix(0.5)
    a, b, c, d, gamma = extension_coefficients(0.0)
    assert (a, b, c, d) == (9, 6, 1.0, 2)
    assert gamma == pytest.approx(1 / 12)


def test_word_rules():
    assert trim_word((3, 1, 2, 1, 1)) == (3, 1, 2)
    assert word_admissible(Series.ZERO, (1, 1, 3, 2), 2)
    assert not word_admissible(Series.ZERO, (1, 2), 2)
    assert word_admissible(Series.FOUR_THIRDS, (1, 2), 2)
    assert not word_admissible(Series.FOUR_THIRDS, (3,), 2)
    assert not word_admissible(Series.FOUR_THIRDS, (2,), 2)
    assert fourthirds_multiplicity(2, 1) == 11


def test_record_values_and_sequences():
    rec = make_record(2, Series.ZERO, 0, (3,))
    assert rec.value == pytest.approx(16.1727673708, rel=1e-10)
    seq = graph_eigenvalue_sequence(rec, 3)
    assert seq[:2] == [0.0, pytest.approx(5 / 6)]
    born = make_record(2, Series.FOUR_THIRDS, 1, ())
    seq = graph_eigenvalue_sequence(born, 2)
    assert math.isnan(seq[0]) and seq[1] == FOUR_THIRDS
    with pytest.raises(ValueError):
        make_record(2, Series.ZERO, 0, (2,))


@pytest.mark.parametrize("n,m", [(2, 0), (2, 1), (2, 2), (2, 3), (3, 1), (3, 2)])
def test_predicted_spectrum_matches_dense_oracle(n, m):
    pred = group_eigenvalues(np.repeat([v for v, _ in spectrum_at_level(n, m)], [k for _, k in spectrum_at_level(n, m)]))
    oracle = oracle_spectrum(cached_graph(n, m))
    assert [k for _, k in pred] == [k for _, k in oracle]
    np.testing.assert_allclose([v for v, _ in pred], [v for v, _ in oracle], atol=1e-9)


def test_enumeration_agrees_with_brute_force():
    fast = enumerate_spectrum(2, 3)
    slow = brute_enumerate(2, 3)
    assert [r.key for r in fast.records] == [r.key for r in slow.records]
    np.testing.assert_allclose(fast.values, slow.values, rtol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_segment_structure(n):
    table = enumerate_spectrum(n, 3)
    segs = table.segments()
    assert table.alternates()
    assert len(segs[0]) == 2 * n
    assert all(len(s) == 4 * n - 2 for s in segs[1:-1])
    assert table.records[0].value == 0.0 and table.records[0].multiplicity == 1


def test_total_multiplicity_counts_every_eigenvalue():
    table = enumerate_spectrum(2, 2)
    assert table.total_multiplicity == 76
    assert table.cumulative[-1] == table.total_multiplicity
