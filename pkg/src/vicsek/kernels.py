"""Heat, wave and projection kernels from the decimation spectrum.

Every 4/3-series eigenfunction vanishes at the centre q0, so kernels with
one argument at q0 only involve the 0-series, whose eigenspaces are one
dimensional. Integrals against μ are weighted vertex sums on V_M; since
each eigenfunction is an exact graph eigenfunction on V_M (M at least the
spectral depth), its graph mean is exactly that of the fractal function.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy.optimize import curve_fit
from scipy.sparse import csgraph

from .decimation import Series, enumerate_spectrum
from .eigenfunc import build_eigenfunctions
from .vsgraph import CENTER, VicsekParams, cached_graph, diagonal_vertices, distances_from, isometry_map

SMALL_ARGUMENT = 1e-8
MAX_PROJECTION_DEPTH = 5


@dataclass
class KernelField:
    """Values of a kernel with one argument fixed, on V_level."""

    n: int
    level: int
    time: float | None
    values: np.ndarray
    depth: int
    tail_bound: float = 0.0
    kind: str = ""
    extra: dict = field(default_factory=dict)

    def integral(self) -> float:
        return float(np.dot(cached_graph(self.n, self.level).weights, self.values))

    def abs_integral(self) -> float:
        return float(np.dot(cached_graph(self.n, self.level).weights, np.abs(self.values)))


@dataclass(frozen=True)
class ZeroSeriesData:
    """Unit 0-series eigenfunctions on V_level from a depth-k table."""

    n: int
    depth: int
    level: int
    eigenvalues: np.ndarray
    functions: np.ndarray  # (N_level, r)
    center_values: np.ndarray
    next_eigenvalues: np.ndarray  # 0-series values first appearing at depth+1


@lru_cache(maxsize=16)
def zero_series_data(n: int, depth: int, level: int | None = None) -> ZeroSeriesData:
    level = depth if level is None else level
    if level < depth:
        raise ValueError("integration level must be at least the spectral depth")
    table = enumerate_spectrum(n, depth)
    recs = [r for r in table.records if r.series == Series.ZERO]
    funcs, centers = [], []
    for r in recs:
        f = build_eigenfunctions(r, level).functions[0]
        funcs.append(f.values)
        centers.append(f.center_value)
    nxt = enumerate_spectrum(n, depth + 1)
    known = {r.key for r in recs}
    extra = [r.value for r in nxt.records if r.series == Series.ZERO and r.key not in known]
    return ZeroSeriesData(
        n,
        depth,
        level,
        np.array([r.value for r in recs]),
        np.column_stack(funcs),
        np.array(centers),
        np.array(extra),
    )


def _check_time(t: float, strict: bool = True):
    if (strict and t <= 0) or t < 0:
        raise ValueError(f"time must be {'> 0' if strict else '≥ 0'}, got {t}")


def heat_center(n: int, t: float, M: int | None = None, k: int = 4) -> KernelField:
    """h(t, q0, ·) on V_M from the 0-series through depth k.

    ``extra['H']`` holds the normalized profile h(t, q0, x) / h(t, q0, q0).
    """
    _check_time(t)
    d = zero_series_data(n, k, M)
    coef = np.exp(-t * d.eigenvalues) * d.center_values
    vals = d.functions @ coef
    at_center = float(np.dot(coef, d.center_values))
    tail = float(np.sum(np.exp(-t * d.next_eigenvalues)))
    return KernelField(n, d.level, t, vals, k, tail, "heat", {"H": vals / at_center, "center": at_center})


def heat_scaling_discrepancy(n: int, t: float, M: int, k: int) -> float:
    """sup over diagonal x in V_{M-1} of |H(t, x) - H(t/ρ, F_0 x)|."""
    p = VicsekParams(n)
    g = cached_graph(n, M)
    coarse = cached_graph(n, M - 1)
    h1 = heat_center(n, t, M, k).extra["H"]
    h2 = heat_center(n, t / p.rho, M, k).extra["H"]
    diag = diagonal_vertices(coarse, "full")
    s = p.scale
    # F_0 on the lattice of V_M: x -> x + (n-1) D_{M-1} in both coordinates
    shift = (n - 1) * coarse.denominator
    pts = coarse.vertices[diag] + shift
    images = g.lookup(pts)
    assert s * coarse.denominator == g.denominator
    return float(np.max(np.abs(h1[diag] - h2[images])))


def heat_trace(n: int, ts: Iterable[float], k: int = 6) -> list[tuple[float, float, float]]:
    """(t, Σ m(λ) e^{-tλ}, t^α Σ m(λ) e^{-tλ}) over every eigenvalue through depth k."""
    table = enumerate_spectrum(n, k)
    vals = table.values
    mult = table.multiplicities.astype(float)
    alpha = VicsekParams(n).alpha
    out = []
    for t in ts:
        _check_time(t)
        tr = float(np.dot(mult, np.exp(-t * vals)))
        out.append((float(t), tr, float(t**alpha * tr)))
    return out


def log_periodic_model(t, a, b, c, d):
    return a + b * np.sin(c * np.log(t) + d)


def fit_log_periodic(ts: Sequence[float], ys: Sequence[float], period_guess: float) -> tuple:
    """Least-squares fit of a + b sin(c log t + d); returns (a, b, c, d) with b ≥ 0."""
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    c0 = 2 * math.pi / math.log(period_guess)
    a0 = float(np.mean(ys))
    b0 = float(np.std(ys) * math.sqrt(2))
    best = None
    for d0 in np.linspace(-math.pi, math.pi, 8, endpoint=False):
        try:
            popt, _ = curve_fit(log_periodic_model, ts, ys, p0=[a0, b0, c0, d0], maxfev=20000)
        except RuntimeError:
            continue
        res = float(np.sum((log_periodic_model(ts, *popt) - ys) ** 2))
        if best is None or res < best[0]:
            best = (res, popt)
    if best is None:
        raise RuntimeError("log-periodic fit failed")
    a, b, c, d = best[1]
    if b < 0:
        b, d = -b, d + math.pi
    if c < 0:
        c, d = -c, math.pi - d
    d = (d + math.pi) % (2 * math.pi) - math.pi
    return float(a), float(b), float(c), float(d)


def sinc_sqrt(lam: np.ndarray, t: float) -> np.ndarray:
    """sin(√λ t)/√λ, with its Taylor series where λ t² is tiny."""
    lam = np.asarray(lam, dtype=float)
    z = lam * t * t
    small = z < SMALL_ARGUMENT
    safe = np.where(small, 1.0, lam)
    root = np.sqrt(safe)
    series = t * (1 - z / 6 + z * z / 120)
    return np.where(small, series, np.sin(root * t) / root)


def wave_center(n: int, t: float, M: int | None = None, k: int = 4) -> KernelField:
    """W(t, q0, ·) on V_M from the 0-series through depth k."""
    _check_time(t, strict=False)
    d = zero_series_data(n, k, M)
    coef = sinc_sqrt(d.eigenvalues, t) * d.center_values
    vals = d.functions @ coef
    tail = float(np.sum(np.abs(sinc_sqrt(d.next_eigenvalues, t))))
    return KernelField(n, d.level, t, vals, k, tail, "wave")


def projection_kernel(n: int, k: int, x: int, M: int | None = None) -> KernelField:
    """K_k(x, ·) = Σ u(x) u(·) over unit 0-series eigenfunctions present at level k."""
    if k > MAX_PROJECTION_DEPTH:
        raise ValueError(f"projection depth {k} exceeds budget {MAX_PROJECTION_DEPTH}")
    d = zero_series_data(n, k, M)
    vals = d.functions @ d.functions[x]
    return KernelField(n, d.level, None, vals, k, 0.0, "projection", {"x": x})


def projection_kernel_matrix(n: int, k: int, M: int | None = None) -> np.ndarray:
    """All K_k(x, y) for x, y in V_M."""
    d = zero_series_data(n, k, M)
    return d.functions @ d.functions.T


def projection_abs_integrals(n: int, k: int, M: int | None = None) -> np.ndarray:
    """∫|K_k(x, y)| dμ(y) for every x in V_M."""
    d = zero_series_data(n, k, M)
    w = cached_graph(n, d.level).weights
    out = np.empty(d.functions.shape[0])
    step = 2048
    for i in range(0, len(out), step):
        block = d.functions[i : i + step] @ d.functions.T
        out[i : i + step] = np.abs(block) @ w
    return out


def projection_invariance_error(n: int, k: int, perm: Sequence[int], M: int | None = None) -> float:
    d = zero_series_data(n, k, M)
    phi = isometry_map(cached_graph(n, d.level), perm)
    kmat = d.functions @ d.functions.T
    return float(np.max(np.abs(kmat[np.ix_(phi, phi)] - kmat)))


@dataclass
class LevelRegion:
    vertices: np.ndarray
    components: int
    radius: float


def level_set_region(fld: KernelField, s: float, mode: str = "heatball", diagonal_only: bool = False) -> LevelRegion:
    """Superlevel set {field ≥ s} (heatball) or {|field| ≥ s} (abs-width).

    ``radius`` is the largest geodesic distance from q0 within the set,
    and ``components`` counts its connected pieces in Γ_M.
    """
    g = cached_graph(fld.n, fld.level)
    if mode == "heatball":
        mask = fld.values >= s
    elif mode == "abs-width":
        mask = np.abs(fld.values) >= s
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if diagonal_only:
        on = np.zeros(g.num_vertices, dtype=bool)
        on[diagonal_vertices(g, "full")] = True
        on[diagonal_vertices(g, "full24")] = True
        mask &= on
    idx = np.nonzero(mask)[0]
    if len(idx) == 0:
        return LevelRegion(idx, 0, 0.0)
    sub = g.adjacency[idx][:, idx]
    ncomp, _ = csgraph.connected_components(sub, directed=False)
    dist = _center_distances(fld.n, fld.level)
    return LevelRegion(idx, int(ncomp), float(dist[idx].max()))


@lru_cache(maxsize=8)
def _center_distances(n: int, level: int) -> np.ndarray:
    return distances_from(cached_graph(n, level), CENTER)


def wave_width(n: int, ts: Iterable[float], eps: float, M: int | None = None, k: int = 4, diagonal_only=True):
    """(t, max |x| with |W(t, q0, x)| ≥ eps) along a time grid."""
    return [(float(t), level_set_region(wave_center(n, t, M, k), eps, "abs-width", diagonal_only).radius) for t in ts]


def write_field_csv(fld: KernelField, out: TextIO) -> None:
    """Columns vertex_x, vertex_y, value with lattice coordinates scaled to [0, 1]."""
    g = cached_graph(fld.n, fld.level)
    w = csv.writer(out)
    w.writerow(["vertex_x", "vertex_y", "value"])
    d = float(g.denominator)
    for (x, y), v in zip(g.vertices, fld.values):
        w.writerow([f"{x / d:.12g}", f"{y / d:.12g}", f"{v:.12g}"])


def write_trace_csv(rows, out: TextIO) -> None:
    w = csv.writer(out)
    w.writerow(["t", "trace", "scaled"])
    for t, tr, sc in rows:
        w.writerow([f"{t:.12g}", f"{tr:.12g}", f"{sc:.12g}"])


def heat_kernel_full(n: int, t: float, x: int, k: int = 3, M: int | None = None) -> KernelField:
    """h(t, x, ·) from complete eigenbases (both series) through depth k ≤ 3."""
    _check_time(t)
    if k > 3:
        raise ValueError("full heat kernel limited to depth 3")
    M = k if M is None else M
    table = enumerate_spectrum(n, k)
    vals = np.zeros(cached_graph(n, M).num_vertices)
    for r in table.records:
        mat = build_eigenfunctions(r, M).matrix
        vals += math.exp(-t * r.value) * (mat @ mat[x])
    return KernelField(n, M, t, vals, k, 0.0, "heat-full", {"x": x})
