import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vicsek.decimation import Series, decimation_system, enumerate_spectrum, make_record, word_admissible
from vicsek.gaps import (
    clustering_certificate,
    cluster_demo,
    gap_containing,
    ratio_gaps,
    ratio_intervals,
    reduce_ratio,
    soundness_violations,
)
from vicsek.vsgraph import BudgetError

CLUSTER_TABLE = {
    2: (0.9024, 1.6314e1),
    3: (0.8905, 1.3999e2),
    4: (0.8891, 1.2355e3),
    5: (0.8889, 1.1079e4),
    6: (0.8889, 9.9655e4),
    7: (0.8889, 8.9682e5),
    8: (0.8889, 8.0713e6),
    9: (0.8889, 7.2641e7),
}


def _gap_around(cert, x):
    found = [g for g in cert.gaps if g[0] < x < g[1]]
    return found[0] if found else None


def test_interval_pieces_n2():
    pieces = ratio_intervals(2, 1)
    sys = decimation_system(2)
    assert len(pieces) <= 2 * 3
    kinds = {(p.word, p.kind) for p in pieces}
    assert ((1,), "fourthirds") in kinds
    assert ((3,), "interval") in kinds
    top = sys.psi(sys.fixed_points()[1])
    for p in pieces:
        assert 0 < p.lo <= p.hi <= top * (1 + 1e-12)
    single = [p for p in pieces if p.word == (1,)][0]
    assert single.lo == pytest.approx(sys.psi(1 / 6), rel=1e-12)


@pytest.mark.parametrize("n,ell", [(2, 2), (3, 2)])
def test_interval_count_bound(n, ell):
    assert len(ratio_intervals(n, ell)) <= 2 * (2 * n - 1) ** ell


def test_gap_table_n2():
    g1 = _gap_around(ratio_gaps(2, 1), math.sqrt(15))
    assert g1 == pytest.approx((3.5370, 4.2409), abs=1e-3)
    g2 = _gap_around(ratio_gaps(2, 2), math.sqrt(15))
    assert g2 == pytest.approx((3.2948, 4.5526), abs=1e-3)


def test_gap_table_n3():
    assert _gap_around(ratio_gaps(3, 1), math.sqrt(45)) is None
    assert _gap_around(ratio_gaps(3, 2), 6.71) == pytest.approx((6.6952, 6.7212), abs=1e-3)


def test_gaps_are_disjoint_from_their_bounding_intervals():
    cert = ratio_gaps(2, 2)
    for (lo, hi), (left, right) in zip(cert.gaps, cert.bounding):
        assert left is not None and left.hi <= lo
        if right is not None:
            assert right.lo >= hi


@pytest.mark.parametrize("n,ell", [(2, 1), (2, 2), (3, 2)])
def test_no_realized_ratio_falls_in_a_gap(n, ell):
    assert soundness_violations(ratio_gaps(n, ell), depth=4) == 0


def test_gaps_grow_with_word_length():
    small, large = ratio_gaps(2, 1), ratio_gaps(2, 2)
    for lo, hi in small.gaps:
        assert any(a <= lo and hi <= b for a, b in large.gaps)


def test_streaming_search_agrees_with_full_certificate():
    for n, ell, x in [(2, 1, math.sqrt(15)), (2, 2, 1.6), (3, 2, 6.71)]:
        full = _gap_around(ratio_gaps(n, ell), x)
        streamed = gap_containing(n, ell, x, chunk=4)
        assert streamed == pytest.approx(full, rel=1e-12)


def test_streaming_search_finds_nothing_at_realized_ratios():
    table = enumerate_spectrum(2, 3)
    vals = table.values[table.values > 0]
    x = float(reduce_ratio(np.array([vals[1] / vals[0]]), 15.0)[0])
    assert gap_containing(2, 2, x) is None


def test_streaming_search_for_n5():
    assert gap_containing(5, 3, math.sqrt(153)) is None


def test_point_must_lie_in_period():
    with pytest.raises(ValueError):
        gap_containing(2, 1, 20.0)


def test_word_budget():
    with pytest.raises(BudgetError, match="gap_containing"):
        ratio_intervals(5, 6, budget=1000)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(1e-6, 1e9))
def test_reduce_ratio_lands_in_one_period(x):
    r = float(reduce_ratio(np.array([x]), 15.0)[0])
    assert 1 - 1e-12 <= r < 15 * (1 + 1e-12)
    k = math.log(x / r) / math.log(15)
    assert abs(k - round(k)) < 1e-9


@pytest.mark.parametrize("n", sorted(CLUSTER_TABLE))
def test_clustering_table(n):
    cert = clustering_certificate(n)
    t, rp = CLUSTER_TABLE[n]
    assert float(f"{cert.t:.4g}") == t
    assert float(f"{cert.rprime:.5g}") == rp
    assert cert.certified
    sys = decimation_system(n)
    # the residual is amplified by the slope of R at the fixed point
    assert abs(sys.R(cert.t) - cert.t) <= 1e-14 * cert.rprime


def test_cluster_demo_packs_distinct_eigenvalues():
    demo = cluster_demo(2, 3, 1e-3)
    vals = demo.values
    assert len(vals) == 3
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert demo.spread <= mpmath.mpf("1e-3")
    assert len({r.word for r in demo.records}) == 3
    for r in demo.records:
        assert word_admissible(Series.ZERO, r.word, 2)


def test_cluster_demo_values_match_records_for_short_words():
    demo = cluster_demo(3, 2, 0.5)
    assert demo.repeats <= 60
    for v, r in zip(demo.values, demo.records):
        assert float(v) == pytest.approx(r.value, rel=1e-9)
        assert make_record(3, Series.ZERO, 0, r.word).value == pytest.approx(float(v), rel=1e-9)


def test_cluster_demo_small_case_is_in_the_enumeration():
    demo = cluster_demo(2, 2, 200.0)
    depth = demo.seed_level + demo.repeats
    table = enumerate_spectrum(2, depth + 1)
    for v in demo.values:
        assert np.min(np.abs(table.values - float(v))) <= 1e-9 * float(v)


def test_cluster_demo_single_value():
    demo = cluster_demo(2, 1, 1e-6)
    assert len(demo.values) == 1 and demo.spread == 0
