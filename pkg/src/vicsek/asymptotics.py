"""Counting function, Weyl ratios and the large-n limit of VS_n.

As n grows VS_n approaches a cross of two unit diagonals. The lowest
eigenvalues come from level-1 graph eigenvalues, which on one arm reduce
to a tridiagonal system along the diagonal vertices x_1..x_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import brentq

from .decimation import FOUR_THIRDS, Series, SpectrumTable, decimation_system, enumerate_spectrum, make_record
from .vsgraph import VicsekParams

COUNT_RTOL = 1e-11
SERIES_CHOICES = ("zero", "fourthirds", "neumann-interval-odd", "neumann-interval-even")


@dataclass(frozen=True)
class WeylSample:
    x: float
    count: int
    ratio: float
    s: float


def counting(table: SpectrumTable, x: float, left: bool = False) -> int:
    """N(x) = Σ_{λ ≤ x} m(λ); with ``left`` the limit from below, Σ_{λ < x}."""
    if x > table.upper_value * (1 + COUNT_RTOL):
        raise ValueError(f"x = {x} exceeds the enumerated range {table.upper_value}")
    vals = table.values
    cut = x * (1 - COUNT_RTOL) if left else x * (1 + COUNT_RTOL)
    mask = vals < cut if left else vals <= cut
    return int(table.multiplicities[mask].sum())


def counting_and_weyl(table: SpectrumTable, xs: Iterable[float]) -> list[WeylSample]:
    """N(x), W(x) = N(x)/x^α and s = (log x - log λ_1)/log ρ along a grid."""
    p = VicsekParams(table.n)
    lam1 = first_positive_eigenvalue(table.n)
    out = []
    for x in xs:
        c = counting(table, x)
        out.append(WeylSample(float(x), c, c / x**p.alpha, (math.log(x) - math.log(lam1)) / math.log(p.rho)))
    return out


def first_positive_eigenvalue(n: int) -> float:
    """λ_1 = ψ_n(4/3), the 4/3-series eigenvalue born at level 0."""
    return decimation_system(n).psi(FOUR_THIRDS)


def normalized_weyl(table: SpectrumTable, ss: Iterable[float], shift: int | None = None) -> list[tuple[float, float]]:
    """Samples (s, W(λ_1 ρ^(K+s))) approximating the periodic w̃_n(s).

    K defaults to the largest shift keeping every sample inside the table.
    """
    p = VicsekParams(table.n)
    lam1 = first_positive_eigenvalue(table.n)
    ss = list(ss)
    if shift is None:
        top = math.log(table.upper_value / lam1) / math.log(p.rho)
        shift = int(math.floor(top - max(ss) + 1e-9))
    out = []
    for s in ss:
        x = lam1 * p.rho ** (shift + s)
        out.append((float(s), counting(table, x) / x**p.alpha))
    return out


def weyl_special_values(n: int, j: int) -> dict:
    """Limit Weyl ratios at the low eigenvalues λ_{2j-1}, λ_{2j}.

    λ_{2j-1} is the 4/3-series eigenvalue ρ ψ(φ_{2j-1}(4/3)) born at level
    0 and λ_{2j} the next (0-series) eigenvalue ρ ψ(φ_{2j+1}(0)).
    """
    if not 1 <= j <= n - 1:
        raise ValueError(f"j must be in 1..{n - 1}")
    sys = decimation_system(n)
    p = sys.params
    a = p.alpha
    lo = fourthirds_low_eigenvalue(n, j)
    hi = float(sys.rho) * sys.psi(sys.branch(2 * j + 1, 0.0))
    return {
        "lambda_odd": lo,
        "lambda_even": hi,
        "w_left": (4 * j - 3) / lo**a,
        "w_at": (4 * j - 1) / lo**a,
        "w_even": 4 * j / hi**a,
    }


def fourthirds_low_eigenvalue(n: int, j: int) -> float:
    sys = decimation_system(n)
    return float(sys.rho) * sys.psi(sys.branch(2 * j - 1, FOUR_THIRDS))


def plateau_bounds(n: int) -> dict:
    """Intervals of s next to 0 where w̃_n(s) is an explicit power."""
    sys = decimation_system(n)
    p = sys.params
    lam1 = first_positive_eigenvalue(n)
    fixed, _, _ = sys.fixed_points()
    left = -(math.log(lam1) - math.log(sys.psi(fixed))) / math.log(p.rho)
    right = (math.log(p.rho) + math.log(sys.psi(sys.branch(2, fixed))) - math.log(lam1)) / math.log(p.rho)
    return {"left": left, "right": right, "w0_minus": 1 / lam1**p.alpha, "w0": 3 / lam1**p.alpha}


def weyl_plateau_value(n: int, s: float) -> float:
    """w̃_n(s) on the explicit plateaus around s = 0."""
    b = plateau_bounds(n)
    p = VicsekParams(n)
    if b["left"] <= s < 0:
        return b["w0_minus"] / p.rho ** (p.alpha * s)
    if 0 <= s <= b["right"]:
        return b["w0"] / p.rho ** (p.alpha * s)
    raise ValueError(f"s = {s} outside the plateaus [{b['left']}, {b['right']}]")


# --------------------------------------------------------------------------
# arm reduction


def arm_matrices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(E, G̃): the path-graph matrix and the Neumann weight matrix on x_1..x_n."""
    e = np.diag(np.ones(n)) - 0.5 * np.diag(np.ones(n - 1), 1) - 0.5 * np.diag(np.ones(n - 1), -1)
    e[0, 0] = e[-1, -1] = 0.5
    gt = np.eye(n)
    gt[-1, -1] = 0.5
    return e, gt


def zero_series_weight(lam: float) -> float:
    """Endpoint weight (3λ-3)/(3λ-4) of the four-arm symmetric equation."""
    return (3 * lam - 3) / (3 * lam - 4)


@dataclass
class ArmSolution:
    series: str
    E: np.ndarray
    G: np.ndarray  # G̃ for linear series, G at λ = 0 otherwise
    eigenvalues: np.ndarray  # level-1 graph eigenvalues λ (the system has eigenvalue 3λ)
    vectors: np.ndarray  # columns u(x_1..x_n), max-normalized


def _tridiag_det_parts(lam: float, n: int) -> tuple[float, float]:
    """det(E - 3λ D) and its minor without the first row/column, D = diag(0,1,..,1,1/2)."""
    e, gt = arm_matrices(n)
    d = gt.copy()
    d[0, 0] = 0.0
    m = e - 3 * lam * d
    # continuant from the bottom: f_k = det of trailing block starting at k
    f_next, f_cur = 1.0, m[-1, -1]
    for k in range(n - 2, -1, -1):
        f_next, f_cur = f_cur, m[k, k] * f_cur - m[k, k + 1] * m[k + 1, k] * f_next
    # f_cur = det(m), f_next = minor
    return f_cur, f_next


def zero_series_polynomial(lam: float, n: int) -> float:
    """(3λ-4) det(E - 3λ G(λ)), a polynomial in λ."""
    det0, minor = _tridiag_det_parts(lam, n)
    return (3 * lam - 4) * det0 - 3 * lam * (3 * lam - 3) * minor


def _null_vector(mat: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(mat)
    v = vt[-1]
    return v / v[np.argmax(np.abs(v))]


def arm_system(n: int, series: str) -> ArmSolution:
    """Solve the one-arm reduction E u = 3λ G u for level-1 eigenvalues."""
    if series not in SERIES_CHOICES:
        raise ValueError(f"series must be one of {SERIES_CHOICES}")
    e, gt = arm_matrices(n)
    if series == "zero":
        grid = np.linspace(0.0, FOUR_THIRDS, 2000 * n + 1)
        vals = np.array([zero_series_polynomial(x, n) for x in grid])
        roots = []
        for i in range(len(grid) - 1):
            if vals[i] == 0:
                roots.append(grid[i])
            elif vals[i] * vals[i + 1] < 0:
                roots.append(brentq(zero_series_polynomial, grid[i], grid[i + 1], args=(n,), xtol=1e-15))
        # 2/3 makes the off-diagonal elimination singular, 4/3 comes from clearing the denominator
        roots = [r for r in roots if abs(r - 2 / 3) > 1e-9 and abs(r - FOUR_THIRDS) > 1e-9]
        lam = np.array(sorted(roots))
        vecs = []
        for x in lam:
            g = gt.copy()
            g[0, 0] = zero_series_weight(x)
            vecs.append(_null_vector(e - 3 * x * g))
        g0 = gt.copy()
        g0[0, 0] = zero_series_weight(0.0)
        return ArmSolution(series, e, g0, lam, np.column_stack(vecs))
    mat = e.copy()
    if series in ("fourthirds", "neumann-interval-odd"):
        mat[0, 0] += 1.0
    w, v = eigh(mat, gt)
    lam = w / 3.0
    keep = np.abs(lam - 2 / 3) > 1e-9 if series == "fourthirds" else np.ones(len(lam), dtype=bool)
    lam, v = lam[keep], v[:, keep]
    if series == "fourthirds":
        lam, v = lam[: n - 1], v[:, : n - 1]
    v = v / v[np.argmax(np.abs(v), axis=0), np.arange(v.shape[1])]
    return ArmSolution(series, e, gt, lam, v)


def sine_profile(n: int, j: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    return np.sin(np.pi * (j - 0.5) * (2 * k - 1) / (2 * n - 1))


def cosine_profile(n: int, j: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    return np.cos(np.pi * j * (2 * k - 1) / (2 * n - 1))


def profile_deviation(vec: np.ndarray, ref: np.ndarray) -> float:
    """max |vec - c ref| with c the least-squares scale."""
    c = np.dot(vec, ref) / np.dot(ref, ref)
    return float(np.max(np.abs(vec - c * ref)) / np.max(np.abs(vec)))


def decimation_level_one(n: int, series: str) -> np.ndarray:
    """Level-1 eigenvalues from the decimation branches, ascending."""
    sys = decimation_system(n)
    if series == "fourthirds":
        return np.array([sys.branch(2 * j - 1, FOUR_THIRDS) for j in range(1, n)])
    if series == "zero":
        return np.array([0.0] + [sys.branch(2 * j + 1, 0.0) for j in range(1, n)])
    raise ValueError(series)


def cross_limit(j: int, series: str) -> float:
    """Limit of the j-th low eigenvalue as n → ∞."""
    if series == "fourthirds":
        return 4 * math.pi**2 / 3 * (j - 0.5) ** 2
    if series == "zero":
        return 4 * math.pi**2 / 3 * (j - 1) ** 2
    raise ValueError(series)


def fractal_low_eigenvalue(n: int, j: int, series: str) -> float:
    """ρ ψ(φ_{2j-1}(start)), start = 4/3 or 0."""
    sys = decimation_system(n)
    start = FOUR_THIRDS if series == "fourthirds" else 0.0
    return float(sys.rho) * sys.psi(sys.branch(2 * j - 1, start))


@dataclass
class ConvergenceTable:
    rows: list  # (n, value, limit, error)
    order: float  # fitted exponent p in error ~ C n^-p
    decreasing: bool


def fit_order(ns: Sequence[float], errs: Sequence[float]) -> float:
    ns, errs = np.asarray(ns, float), np.abs(np.asarray(errs, float))
    if np.any(errs == 0):
        return math.inf
    slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
    return float(-slope)


def cross_limit_check(j: int, series: str, ns: Sequence[int]) -> ConvergenceTable:
    """Fractal eigenvalue vs its cross limit along a list of n."""
    lim = cross_limit(j, series)
    rows = []
    for n in ns:
        val = fractal_low_eigenvalue(n, j, series)
        rows.append((n, val, lim, abs(val - lim)))
    errs = [r[3] for r in rows]
    dec = all(b < a for a, b in zip(errs, errs[1:]))
    return ConvergenceTable(rows, fit_order(ns, errs), dec)


def interval_comparison_check(j: int, series: str, ns: Sequence[int]) -> ConvergenceTable:
    """Level-1 eigenvalue vs the matching Neumann path-graph eigenvalue.

    The 4/3-series matches the odd path problem exactly. The 0-series
    compares with the even problem, 3λ̃ = 2 sin²(πj'/(2n-1)) with j' = j-1,
    and differs only through the endpoint weight.
    """
    rows = []
    for n in ns:
        lam = decimation_level_one(n, series)[j - 1]
        if series == "zero":
            ref = 2 * math.sin(math.pi * (j - 1) / (2 * n - 1)) ** 2 / 3
        else:
            ref = 2 * math.sin(math.pi * (j - 0.5) / (2 * n - 1)) ** 2 / 3
        rows.append((n, lam, ref, abs(lam - ref)))
    errs = [r[3] for r in rows]
    dec = all(b < a for a, b in zip(errs, errs[1:]))
    return ConvergenceTable(rows, fit_order(ns, errs), dec)


def psi_bounds(ns: Iterable[int], grid: np.ndarray | None = None) -> dict:
    """c(n) = max (ψ_n(t) - t)/t² over a grid on (0, 1], and whether ψ_n(t) ≥ t."""
    grid = np.linspace(1e-3, 1.0, 400) if grid is None else grid
    out = {}
    for n in ns:
        sys = decimation_system(n)
        ps = sys.psi(grid)
        out[n] = {"c": float(np.max((ps - grid) / grid**2)), "above_identity": bool(np.all(ps >= grid * (1 - 1e-13)))}
    return out


def low_eigenvalue_counts(n: int, j: int, k: int, table: SpectrumTable | None = None) -> dict:
    """Counting-function values at ρ^k λ_{2j-1} and ρ^k λ_{2j} with their predictions."""
    sys = decimation_system(n)
    table = enumerate_spectrum(n, k + 2) if table is None else table
    nm = 4 * n - 3
    odd = make_record(sys, Series.FOUR_THIRDS, k, (2 * j - 1,)).value
    even = make_record(sys, Series.ZERO, 0, (1,) * k + (2 * j + 1,)).value
    rec = {r.key: r for r in table.records}
    key = (Series.FOUR_THIRDS.value, k, (2 * j - 1,) if 2 * j - 1 != 1 else ())
    return {
        "N_odd": counting(table, odd),
        "N_odd_expected": (4 * j - 1) * nm**k + 1,
        "N_odd_left": counting(table, odd, left=True),
        "N_odd_left_expected": (4 * j - 3) * nm**k,
        "N_even": counting(table, even),
        "N_even_expected": 4 * j * nm**k + 1,
        "mult_odd": rec[key].multiplicity if key in rec else None,
        "mult_odd_expected": 2 * nm**k + 1,
    }


def plateau_counts(n: int, k: int, table: SpectrumTable | None = None) -> tuple[int, int, int]:
    """(N at the lower plateau end, N just below ρ^k λ_1, (4n-3)^k)."""
    sys = decimation_system(n)
    table = enumerate_spectrum(n, k + 1) if table is None else table
    low = make_record(sys, Series.ZERO, 0, (2 * n - 1,) * k).value if k else 0.0
    top = float(sys.rho) ** k * first_positive_eigenvalue(n)
    return counting(table, low), counting(table, top, left=True), (4 * n - 3) ** k
