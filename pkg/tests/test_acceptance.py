"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import mpmath
import numpy as np
import pytest

from vicsek.asymptotics import (
    arm_system,
    cross_limit,
    cross_limit_check,
    decimation_level_one,
    low_eigenvalue_counts,
    plateau_bounds,
)
from vicsek.decimation import (
    FOUR_THIRDS,
    PreciseBranches,
    Series,
    decimation_system,
    enumerate_spectrum,
    make_record,
    spectrum_at_level,
)
from vicsek.eigenfunc import (
    build_eigenfunctions,
    diagonal_coefficients,
    extended_relation_residual,
    extended_relation_solution,
    norm_factor,
    norm_factor_closed_form,
    perp_function,
)
from vicsek.gaps import clustering_certificate, ratio_gaps, soundness_violations
from vicsek.green import SkeletonPoint, green_eval, green_field, green_verify_grid, harmonicity_defect, skeleton_points
from vicsek.kernels import fit_log_periodic, heat_center, heat_trace, projection_abs_integrals, projection_kernel, wave_center
from vicsek.vsgraph import cached_graph, group_eigenvalues, inner_product, oracle_spectrum


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return emit


def test_criterion_01_oracle_equivalence(report):
    start = time.perf_counter()
    worst, mult_ok = 0.0, True
    for m in range(4):
        pairs = spectrum_at_level(2, m)
        pred = group_eigenvalues(np.repeat([v for v, _ in pairs], [k for _, k in pairs]))
        oracle = oracle_spectrum(cached_graph(2, m))
        mult_ok &= [k for _, k in pred] == [k for _, k in oracle]
        if len(pred) == len(oracle):
            worst = max(worst, float(np.max(np.abs(np.array([v for v, _ in pred]) - [v for v, _ in oracle]))))
    elapsed = time.perf_counter() - start
    report(1, mult_ok and worst <= 1e-9 and elapsed < 60, f"max eigenvalue error {worst:.2e}, multiplicities exact={mult_ok}, {elapsed:.1f}s")


def test_criterion_02_decimation_inverses(report):
    # μ ranges over [0, 4/3], the interval holding every graph eigenvalue a branch is applied to
    rng = np.random.default_rng(2)
    worst, float_floor = mpmath.mpf(0), {}
    with mpmath.workdps(40):
        for n in range(2, 9):
            sys = decimation_system(n)
            br = PreciseBranches(sys)
            fl = 0.0
            for j in range(1, 2 * n):
                mus = rng.uniform(0.0, FOUR_THIRDS, 1000)
                roots = sys.branch(j, mus)
                fl = max(fl, float(np.max(np.abs(sys.R(roots) - mus))))
                for mu, x in zip(mus, roots):
                    m = mpmath.mpf(mu)
                    worst = max(worst, abs(br.R(br.branch(j, m, float(x))) - m))
            float_floor[n] = fl
    sys2 = decimation_system(2)
    special = max(abs(sys2.branch(1, FOUR_THIRDS) - 1 / 6), abs(sys2.branch(3, 0.0) - 5 / 6))
    detail = (
        f"precise residual {float(worst):.1e}, special values {special:.1e}, "
        f"double-precision residual n=4 {float_floor[4]:.1e} n=8 {float_floor[8]:.1e}"
    )
    report(2, worst <= 1e-12 and special <= 1e-13, detail)


def test_criterion_03_segment_structure(report):
    ok, notes = True, []
    for n in (2, 3, 4):
        table = enumerate_spectrum(n, 3)
        segs = table.segments()
        inner = {r.multiplicity for s in segs for r in s[:-1] if r.series == Series.FOUR_THIRDS}
        good = table.alternates() and len(segs[0]) == 2 * n and all(len(s) == 4 * n - 2 for s in segs[1:-1]) and inner == {3}
        ok &= good
        notes.append(f"n={n}:{len(segs)} segments")
    report(3, ok, ", ".join(notes))


def test_criterion_04_inner_product_scaling(report):
    sys = decimation_system(2)
    mat = build_eigenfunctions(make_record(2, Series.FOUR_THIRDS, 0, ()), 4).matrix
    pairs = [(mat[:, 0] + mat[:, 1], mat[:, 1] - 2 * mat[:, 2])] + [(mat[:, i], mat[:, i]) for i in range(3)]
    lam, worst = FOUR_THIRDS, 0.0
    for m in range(1, 5):
        lam = sys.branch(1, lam)
        gc, gf = cached_graph(2, m - 1), cached_graph(2, m)
        expected = norm_factor_closed_form(lam)
        for u, v in pairs:
            ratio = inner_product(gf, u[: gf.num_vertices], v[: gf.num_vertices]) / inner_product(gc, u[: gc.num_vertices], v[: gc.num_vertices])
            worst = max(worst, abs(ratio / expected - 1))
    at_zero = norm_factor(2, 0.0)
    report(4, worst <= 1e-9 and at_zero == 1.0, f"max relative ratio error {worst:.1e}, N(0)={at_zero}")


def test_criterion_05_center_vanishing(report):
    worst, count = 0.0, 0
    for rec in enumerate_spectrum(2, 3).records:
        if rec.series != Series.FOUR_THIRDS:
            continue
        for f in build_eigenfunctions(rec, max(3, rec.settle_level)).functions:
            worst = max(worst, abs(f.center_value))
            count += 1
    relation = 0.0
    for level in range(3):
        for point in range(1, 5):
            w = extended_relation_solution(2, level, point)
            relation = max(relation, extended_relation_residual(2, level, w, point - 1))
    perp_function(2, make_record(2, Series.FOUR_THIRDS, 1, ()), 1)
    report(5, worst <= 1e-10 and relation <= 1e-10, f"max |u(q0)| {worst:.1e} over {count} functions, relation residual {relation:.1e}")


GAP_TABLE = [
    (2, 1, (3.5370, 4.2409)),
    (2, 2, (3.2948, 4.5526)),
    (3, 2, (6.6952, 6.7212)),
    (4, 3, (9.5357, 9.5431)),
]


def test_criterion_06_ratio_gaps(report):
    start = time.perf_counter()
    ok, notes = True, []
    for n, ell, (lo, hi) in GAP_TABLE:
        cert = ratio_gaps(n, ell)
        mid = 0.5 * (lo + hi)
        found = [g for g in cert.gaps if g[0] < mid < g[1]]
        err = max(abs(found[0][0] - lo), abs(found[0][1] - hi)) if found else math.inf
        bad = soundness_violations(cert, depth=4)
        ok &= err <= 1e-3 and bad == 0
        notes.append(f"n={n} l={ell} err {err:.1e} violations {bad}")
    elapsed = time.perf_counter() - start
    report(6, ok and elapsed < 300, "; ".join(notes) + f"; {elapsed:.0f}s")


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


def test_criterion_07_clustering_table(report):
    mismatches = []
    for n, (t, rp) in CLUSTER_TABLE.items():
        cert = clustering_certificate(n)
        if float(f"{cert.t:.4g}") != t or float(f"{cert.rprime:.5g}") != rp or not cert.certified:
            mismatches.append(n)
    report(7, not mismatches, f"mismatched n: {mismatches or 'none'}")


def test_criterion_08_kernel_identities(report):
    heat_err = wave_err = 0.0
    ok = True
    for t in (0.01, 0.1, 1.0):
        h = heat_center(2, t, None, 6)
        w = wave_center(2, t, None, 6)
        e1, e2 = abs(h.integral() - 1), abs(w.integral() - t)
        ok &= e1 <= 1e-5 + h.tail_bound and e2 <= 1e-5 + w.tail_bound
        heat_err, wave_err = max(heat_err, e1), max(wave_err, e2)
    mass = 0.0
    for k in (1, 2, 3):
        g = cached_graph(2, k + 1)
        for x in (0, g.num_vertices // 2, g.num_vertices - 1):
            mass = max(mass, abs(projection_kernel(2, k, x, k + 1).integral() - 1))
    table = {1: (1.4476, 5), 2: (1.7336, 4), 3: (2.9958, 5)}
    abs_err = {k: projection_abs_integrals(2, k, mesh).max() / ref - 1 for k, (ref, mesh) in table.items()}
    ok &= mass <= 1e-10 and all(abs(e) <= 0.02 for e in abs_err.values())
    detail = f"heat {heat_err:.1e}, wave {wave_err:.1e}, projection mass {mass:.1e}, abs-kernel rel " + " ".join(
        f"k={k}:{e:+.2%}" for k, e in abs_err.items()
    )
    report(8, ok, detail)


def test_criterion_09_heat_trace_log_periodic(report):
    ts = np.geomspace(1e-7, 1e-3, 400)
    rows = heat_trace(2, ts, 7)
    a, b, c, d = fit_log_periodic(ts, [r[2] for r in rows], 15.0)
    ok = abs(c / 2.33 - 1) <= 0.05 and abs(a / 0.90 - 1) <= 0.10 and abs(abs(b) / 0.045 - 1) <= 0.10
    report(9, ok, f"a={a:.4f} b={b:.4f} c={c:.4f} d={d:.3f}")


def test_criterion_10_weyl_counting_identities(report):
    ok = True
    for n in (2, 3):
        table = enumerate_spectrum(n, 5)
        for j in range(1, n):
            for k in range(3):
                c = low_eigenvalue_counts(n, j, k, table)
                ok &= c["N_odd"] == (4 * j - 1) * (4 * n - 3) ** k + 1 == c["N_odd_expected"]
        b = plateau_bounds(n)
        ok &= b["w0"] / b["w0_minus"] == 3
    w32 = plateau_bounds(32)["w0"]
    rel = w32 / (3 * math.sqrt(3) / math.pi) - 1
    report(10, ok and abs(rel) <= 0.05, f"integer identities and jump ratio exact={ok}, w32(0) off limit by {rel:+.2%}")


def test_criterion_11_cross_convergence(report):
    arm_err = 0.0
    for n in range(2, 17):
        for series in ("zero", "fourthirds"):
            arm_err = max(arm_err, float(np.max(np.abs(arm_system(n, series).eigenvalues - decimation_level_one(n, series)))))
    table = cross_limit_check(1, "fourthirds", [8, 16, 32, 64])
    errs = [row[3] for row in table.rows]
    ok = table.decreasing and 2.5 <= table.order <= 3.5 and arm_err <= 1e-9
    detail = (
        f"errors vs pi^2/3={cross_limit(1, 'fourthirds'):.6f}: " + ", ".join(f"{e:.3e}" for e in errs)
        + f"; fitted order {table.order:.3f}; arm system error {arm_err:.1e}"
    )
    report(11, ok, detail)


def test_criterion_12_green_function(report):
    grid = green_verify_grid(20)
    g = cached_graph(2, 4)
    rng = np.random.default_rng(12)
    harm = max(harmonicity_defect(g, int(y)) for y in rng.choice(g.num_vertices, 8, replace=False))
    harm = max(harm, harmonicity_defect(g, SkeletonPoint(3, 0.5)))
    boundary = max(float(np.max(np.abs(green_field(g, int(y)).values[list(g.boundary_ids)]))) for y in (5, 100, 400))
    pts = skeleton_points(g)
    sym = max(abs(green_eval(pts[a], pts[b]) - green_eval(pts[b], pts[a])) for a, b in rng.integers(0, g.num_vertices, size=(100, 2)))
    ok = grid <= 1e-12 and harm <= 1e-10 and boundary == 0.0 and sym <= 1e-12
    report(12, ok, f"flux grid {grid:.1e}, harmonicity {harm:.1e}, boundary {boundary}, symmetry {sym:.1e}")


def test_criterion_13_diagonal_restriction(report):
    ranks_ok, recon, values_ok = True, 0.0, True
    for m in range(1, 5):
        dc = diagonal_coefficients(m)
        ranks_ok &= dc.rank == (3**m + 1) // 2
        if m <= 3:
            recon = max(recon, float(np.max(np.abs(dc.coefficients @ dc.basis[dc.diagonal] - dc.basis))))
        if m == 3:
            for vals in dc.value_sets:
                values_ok &= all(min(abs(v - a) for a in (-2, -1, 1, 2)) <= 1e-8 for v in vals)
    report(13, ranks_ok and recon <= 1e-9 and values_ok, f"ranks exact={ranks_ok}, reconstruction {recon:.1e}, coefficient values in +-1,+-2={values_ok}")
