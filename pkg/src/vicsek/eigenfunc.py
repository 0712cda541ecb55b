"""Eigenfunctions built by spectral decimation.

A graph eigenfunction on V_m with eigenvalue λ_m extends uniquely to V_{m+1}
once λ_{m+1} with R(λ_{m+1}) = λ_m is chosen, by applying a fixed
corner-to-interior matrix inside every m-cell. Inner products and centre
values change by explicit scalar factors from one level to the next,
which gives their fractal limits as convergent products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix, csgraph

from .decimation import (
    FOUR_THIRDS,
    DecimationSystem,
    EigenvalueRecord,
    Series,
    decimation_system,
    enumerate_spectrum,
    graph_eigenvalue_sequence,
)
from .vsgraph import GraphApprox, cached_graph, diagonal_vertices, inner_product, laplacian_apply

PRODUCT_TOL = 1e-14
PRODUCT_MAX_TERMS = 400


def _sys(n_or_sys) -> DecimationSystem:
    return n_or_sys if isinstance(n_or_sys, DecimationSystem) else decimation_system(int(n_or_sys))


# --------------------------------------------------------------------------
# extension


@lru_cache(maxsize=32)
def _cell_maps(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Corner indices (C, 4) of the m-cells and the V_{m+1} indices of their interiors."""
    coarse = cached_graph(n, m)
    fine = cached_graph(n, m + 1)
    unit = cached_graph(n, 1)
    s = coarse.params.scale
    interior_offsets = unit.vertices[4:]
    origins = coarse.vertices[coarse.cells[:, 0]] * s
    pts = origins[:, None, :] + interior_offsets[None, :, :]
    interior = fine.lookup(pts.reshape(-1, 2)).reshape(len(origins), -1)
    return coarse.cells, interior


def extend(u: np.ndarray, lam_next: float, g_next: GraphApprox, allow_forbidden: bool = False) -> np.ndarray:
    """Extend values on V_m to V_{m+1} as a λ_next-eigenfunction.

    ``u`` may be one function (shape (N_m,)) or several as columns.
    """
    n, m = g_next.params.n, g_next.level - 1
    if m < 0:
        raise ValueError("cannot extend to level 0")
    u = np.asarray(u, dtype=float)
    n_coarse = g_next.params.vertex_count(m)
    if u.shape[0] != n_coarse:
        raise ValueError(f"expected {n_coarse} values on V_{m}, got {u.shape[0]}")
    mat = _sys(n).extension_matrix(lam_next, allow_forbidden=allow_forbidden)
    corners, interior = _cell_maps(n, m)
    out = np.zeros((g_next.num_vertices,) + u.shape[1:])
    out[:n_coarse] = u
    # (C, 4, ...) corner values -> (C, n_int, ...) interior values
    out[interior] = np.einsum("ij,cj...->ci...", mat, u[corners])
    return out


def eigen_residual(g: GraphApprox, u: np.ndarray, lam: float) -> float:
    """max |Δ u + λ u| relative to max |u|."""
    u = np.asarray(u, dtype=float)
    scale = np.max(np.abs(u)) or 1.0
    return float(np.max(np.abs(laplacian_apply(g, u) + lam * u)) / scale)


# --------------------------------------------------------------------------
# inner product and centre scaling


@lru_cache(maxsize=4096)
def _norm_center_factors(n: int, lam: float) -> tuple[float, float, float]:
    """(α, β, κ) of the cell extension at λ.

    α and β are the diagonal and off-diagonal entries of E^T W E with
    W the interior vertex weights; κ is the common column sum of the rows
    belonging to the corners of the central subcell.
    """
    sys = decimation_system(n)
    e = sys.extension_matrix(lam, allow_forbidden=True)
    unit = cached_graph(n, 1)
    w = unit.degree[4:] / 3.0
    q = e.T @ (w[:, None] * e)
    alpha = float(np.mean(np.diag(q)))
    beta = float(np.mean(q[~np.eye(4, dtype=bool)]))
    central_rows = unit.cells[0] - 4
    kappa = float(np.mean(e[central_rows].sum(axis=0)))
    return alpha, beta, kappa


def norm_factor(sys, lam: float) -> float:
    """N with ⟨u, v⟩_m = N(λ_m) ⟨u, v⟩_{m-1} for eigenfunctions sharing λ_m.

    For n = 2 a rational closed form is used; other n use the cell
    extension matrix directly.
    """
    sys = _sys(sys)
    if sys.is_forbidden(lam):
        raise ValueError(f"λ = {lam!r} is forbidden")
    if sys.n == 2:
        return norm_factor_closed_form(lam)
    return norm_factor_direct(sys, lam)


def norm_factor_direct(sys, lam: float) -> float:
    sys = _sys(sys)
    alpha, beta, _ = _norm_center_factors(sys.n, float(lam))
    return (1.0 + alpha + 3.0 * beta * (1.0 - sys.R(lam))) / sys.params.num_maps


def norm_factor_closed_form(lam: float) -> float:
    num = 20 - 143 * lam + 240 * lam**2 - 108 * lam**3
    den = 4 - 29 * lam + 60 * lam**2 - 36 * lam**3
    return num / (5.0 * den)


def center_factor(sys, lam: float) -> float:
    """Ratio of the central-cell corner means at consecutive levels."""
    sys = _sys(sys)
    if sys.n == 2:
        return (4 - 3 * lam) / (18 * lam**2 - 21 * lam + 4)
    return _norm_center_factors(sys.n, float(lam))[2]


def _tail_product(sys: DecimationSystem, lam: float, factor) -> float:
    """Π_{j ≥ 1} factor(φ_1^(j)(lam))."""
    prod = 1.0
    x = lam
    for _ in range(PRODUCT_MAX_TERMS):
        x = sys.branch(1, x, check=False)
        f = factor(sys, x)
        prod *= f
        if abs(f - 1.0) < PRODUCT_TOL:
            return prod
    raise ArithmeticError("scaling product did not converge")


def sequence_norm_product(sys, lams, start: int) -> float:
    """Π_{m>start} N(λ_m) along a recorded sequence, continued by φ_1 past its end."""
    sys = _sys(sys)
    prod = 1.0
    for lam in lams[start + 1 :]:
        prod *= norm_factor(sys, lam)
    return prod * tail_norm_product(sys, lams[-1])


def tail_norm_product(sys, lam: float) -> float:
    """Π_{j>m} N(λ_j) given λ_m, when all later branches are φ_1."""
    return _tail_product(_sys(sys), lam, norm_factor)


def tail_center_product(sys, lam: float) -> float:
    return _tail_product(_sys(sys), lam, center_factor)


# --------------------------------------------------------------------------
# eigenfunctions


@dataclass
class Eigenfunction:
    """Values on V_level of a fractal eigenfunction."""

    record: EigenvalueRecord
    level: int
    values: np.ndarray
    norm_sq: float
    center_value: float

    @property
    def graph_eigenvalue(self) -> float:
        return graph_eigenvalue_sequence(self.record, self.level)[-1]


@dataclass
class EigenBasis:
    record: EigenvalueRecord
    level: int
    functions: list = field(default_factory=list)

    @property
    def matrix(self) -> np.ndarray:
        """Values as columns, shape (N_level, multiplicity)."""
        return np.column_stack([f.values for f in self.functions])

    def __len__(self) -> int:
        return len(self.functions)


def birth_space_basis(n: int, k: int) -> np.ndarray:
    """Integer basis of {u on V_k : corner sum of every k-cell is 0}.

    Cells and their shared corners form a tree. Rooting it at the cell
    containing q1, each cell solves for one corner: the root for q1,
    every other cell for the corner it shares with its parent. Cells are
    solved from the leaves up, so each solved corner depends only on free
    vertices and corners solved below it. The remaining 2(4n-3)^k + 1
    vertices are free and each gives one basis vector.
    """
    g = cached_graph(n, k)
    cells = g.cells
    nc = len(cells)
    # vertex -> cells incidence
    inc = coo_matrix(
        (np.ones(cells.size), (cells.ravel(), np.repeat(np.arange(nc), 4))), shape=(g.num_vertices, nc)
    ).tocsc()
    cell_adj = (inc.T @ inc).tocsr()
    cell_adj.setdiag(0)
    cell_adj.eliminate_zeros()
    root = int(np.nonzero((cells == 0).any(axis=1))[0][0])
    order, parent = csgraph.breadth_first_order(cell_adj, root, directed=False)
    solved = np.empty(nc, dtype=np.int64)
    solved[root] = 0
    corner_sets = [set(c) for c in cells.tolist()]
    for c in order[1:]:
        shared = corner_sets[c] & corner_sets[parent[c]]
        if len(shared) != 1:
            raise AssertionError("cells must share exactly one corner")
        solved[c] = shared.pop()
    if len(set(solved.tolist())) != nc:
        raise AssertionError("each cell must solve for a distinct vertex")
    is_free = np.ones(g.num_vertices, dtype=bool)
    is_free[solved] = False
    free = np.nonzero(is_free)[0]
    basis = np.zeros((g.num_vertices, len(free)))
    basis[free, np.arange(len(free))] = 1.0
    for c in order[::-1]:
        v = solved[c]
        others = [x for x in cells[c] if x != v]
        basis[v] = -basis[others].sum(axis=0)
    return basis


def _orthonormal_columns(g: GraphApprox, mat: np.ndarray, target_sq: float = 1.0) -> np.ndarray:
    """Modified Gram-Schmidt in ⟨·,·⟩ of g, columns normalized to norm² = target_sq."""
    w = g.weights
    out = np.array(mat, dtype=float, copy=True)
    k = out.shape[1]
    for i in range(k):
        for j in range(i):
            out[:, i] -= np.dot(w * out[:, j], out[:, i]) / target_sq * out[:, j]
        nrm = np.sqrt(np.dot(w * out[:, i], out[:, i]))
        if nrm < 1e-12 * max(1.0, np.max(np.abs(mat[:, i]))):
            raise np.linalg.LinAlgError("numerically singular Gram matrix")
        out[:, i] *= np.sqrt(target_sq) / nrm
    return out


def _extend_through(sys: DecimationSystem, values: np.ndarray, lams: list, start: int, stop: int) -> np.ndarray:
    for m in range(start + 1, stop + 1):
        values = extend(values, lams[m], cached_graph(sys.n, m))
    return values


def build_eigenfunctions(rec: EigenvalueRecord, M: int) -> EigenBasis:
    """Orthonormal basis (unit fractal norm) of the eigenspace of ``rec`` on V_M."""
    sys = decimation_system(rec.n)
    lams = graph_eigenvalue_sequence(rec, M)
    b = rec.birth_level
    if rec.series == Series.ZERO:
        start = np.ones((4, 1))
    else:
        start = birth_space_basis(rec.n, b)
    g_birth = cached_graph(rec.n, b)
    birth_sq = 1.0 / sequence_norm_product(sys, lams, b)
    start = _orthonormal_columns(g_birth, start, birth_sq)
    vals = _extend_through(sys, start, lams, b, M)
    gM = cached_graph(rec.n, M)
    tail_c = tail_center_product(sys, lams[M])
    funcs = []
    for i in range(vals.shape[1]):
        v = vals[:, i]
        center = float(np.mean(v[gM.center_cell])) * tail_c
        funcs.append(Eigenfunction(rec, M, v, 1.0, center))
    return EigenBasis(rec, M, funcs)


def fractal_norm_and_center(u: Eigenfunction) -> tuple[float, float]:
    """Fractal L² norm and value at the centre q0 of a built eigenfunction."""
    sys = decimation_system(u.record.n)
    lams = graph_eigenvalue_sequence(u.record, u.level)
    g = cached_graph(u.record.n, u.level)
    norm_sq = inner_product(g, u.values, u.values) * tail_norm_product(sys, lams[-1])
    center = float(np.mean(u.values[g.center_cell])) * tail_center_product(sys, lams[-1])
    return float(np.sqrt(norm_sq)), center


def orthonormalize(basis: EigenBasis) -> EigenBasis:
    """Gram-Schmidt at the birth level, scaled to unit fractal norm."""
    if not basis.functions:
        return basis
    rec = basis.record
    sys = decimation_system(rec.n)
    lams = graph_eigenvalue_sequence(rec, basis.level)
    b = rec.birth_level
    g_birth = cached_graph(rec.n, b)
    nb = g_birth.num_vertices
    mat = basis.matrix
    birth_sq = 1.0 / sequence_norm_product(sys, lams, b)
    restricted = _orthonormal_columns(g_birth, mat[:nb], birth_sq)
    # the same linear combination applies at every level
    coef, *_ = np.linalg.lstsq(mat[:nb], restricted, rcond=None)
    new = mat @ coef
    g = cached_graph(rec.n, basis.level)
    tail_c = tail_center_product(sys, lams[-1])
    funcs = [
        Eigenfunction(rec, basis.level, new[:, i], 1.0, float(np.mean(new[g.center_cell, i])) * tail_c)
        for i in range(new.shape[1])
    ]
    return EigenBasis(rec, basis.level, funcs)


# --------------------------------------------------------------------------
# boundary projection


EXTENDED_EIGENVALUE = 20.0


def perp_function(sys, rec: EigenvalueRecord, point: int, M: int | None = None) -> Eigenfunction:
    """Unit eigenfunction of ``rec`` orthogonal to all members vanishing at q_point.

    On V_{b-1} (b the birth level) solve (1 - 20) deg(x) w(x) = Σ_{y~x} w(y)
    at every vertex except q_point, where 20 = R(4/3); extending once with
    the level-b eigenvalue 4/3 lands in the birth space.
    """
    sys = _sys(sys)
    if rec.series != Series.FOUR_THIRDS or rec.birth_level < 1:
        raise ValueError("perp_function needs a 4/3-series record born at level ≥ 1")
    if sys.n != 2:
        raise ValueError("perp_function is available for n = 2")
    if point not in (1, 2, 3, 4):
        raise ValueError("point must be a boundary index 1..4")
    b = rec.birth_level
    M = rec.settle_level if M is None else M
    w = extended_relation_solution(sys.n, b - 1, point)
    lams = graph_eigenvalue_sequence(rec, M)
    u = extend(w, FOUR_THIRDS, cached_graph(sys.n, b), allow_forbidden=True)
    g_birth = cached_graph(sys.n, b)
    birth_sq = 1.0 / sequence_norm_product(sys, lams, b)
    u *= np.sqrt(birth_sq / inner_product(g_birth, u, u))
    if u[point - 1] < 0:
        u = -u
    u = _extend_through(sys, u, lams, b, M)
    g = cached_graph(sys.n, M)
    center = float(np.mean(u[g.center_cell])) * tail_center_product(sys, lams[-1])
    return Eigenfunction(rec, M, u, 1.0, center)


def extended_relation_solution(n: int, level: int, point: int) -> np.ndarray:
    """Solve (1-20) deg w - A w = e_point on V_level."""
    g = cached_graph(n, level)
    lhs = (1.0 - EXTENDED_EIGENVALUE) * np.diag(g.degree.astype(float)) - g.adjacency.toarray()
    rhs = np.zeros(g.num_vertices)
    rhs[point - 1] = 1.0
    return np.linalg.solve(lhs, rhs)


def extended_relation_residual(n: int, level: int, w: np.ndarray, skip: int) -> float:
    """Max residual of the eigenvalue-20 relation away from vertex ``skip``."""
    g = cached_graph(n, level)
    res = (1.0 - EXTENDED_EIGENVALUE) * g.degree * w - g.adjacency @ w
    res[skip] = 0.0
    return float(np.max(np.abs(res)) / max(np.max(np.abs(w)), 1e-300))


def cell_corner_sums(g: GraphApprox, u: np.ndarray) -> np.ndarray:
    return np.asarray(u)[g.cells].sum(axis=1)


# --------------------------------------------------------------------------
# diagonal restriction


@dataclass
class DiagonalCoefficients:
    level: int
    diagonal: np.ndarray  # vertex ids x_0, x_1, ... from the outside in
    basis: np.ndarray  # (N_m, dim Z_m) 0-series eigenfunctions
    coefficients: np.ndarray  # (N_m, #D_m), column k is c_k
    rank: int
    value_sets: list  # distinct nonzero values of each c_k
    conjecture_checks: list = field(default_factory=list)  # (j, k, holds)

    @property
    def conjecture_holds(self) -> bool:
        return all(ok for *_, ok in self.conjecture_checks)


def zero_series_records(n: int, m: int) -> list[EigenvalueRecord]:
    """0-series records already present at level m (one per eigenfunction)."""
    table = enumerate_spectrum(n, m)
    return [r for r in table.records if r.series == Series.ZERO]


def zero_series_span(n: int, m: int) -> np.ndarray:
    recs = zero_series_records(n, m)
    return np.column_stack([build_eigenfunctions(r, m).functions[0].values for r in recs])


def diagonal_attachment(g: GraphApprox) -> tuple[np.ndarray, np.ndarray]:
    """Where each vertex attaches to the q1 half-diagonal.

    Returns (diagonal vertices x_0.., attach) where ``attach[v]`` is
    2i if v attaches at x_i, 2i+1 if it attaches at the midpoint of
    [x_i, x_{i+1}], and -1 if it attaches beyond the last diagonal vertex.
    """
    diag = diagonal_vertices(g, 1)
    nv, nc = g.num_vertices, len(g.cells)
    # skeleton tree: each cell joins its corners through a centre node
    rows = g.cells.ravel()
    cols = nv + np.repeat(np.arange(nc), 4)
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(nv + nc, nv + nc))
    adj = (adj + adj.T).tocsr()
    sources = [int(x) for x in diag]
    labels = [2 * i for i in range(len(diag))]
    pos = {int(x): i for i, x in enumerate(diag)}
    for c, corners in enumerate(g.cells):
        a, b = int(corners[0]), int(corners[2])
        if a in pos and b in pos and abs(pos[a] - pos[b]) == 1:
            sources.append(nv + c)
            labels.append(2 * min(pos[a], pos[b]) + 1)
    _, _, src = csgraph.dijkstra(adj, indices=sources, min_only=True, return_predecessors=True)
    lab = dict(zip(sources, labels))
    # the segment towards q0 carries label -1: its far end is not in D_m
    attach = np.array([lab.get(int(s), -1) for s in src[:nv]])
    return diag, attach


def diagonal_coefficients(m: int, n: int = 2) -> DiagonalCoefficients:
    """Coefficients c_k with f(z) = Σ_k c_k(z) f(x_k) for f in the 0-series span Z_m."""
    if n != 2:
        raise ValueError("diagonal coefficients are available for n = 2")
    g = cached_graph(n, m)
    basis = zero_series_span(n, m)
    diag, attach = diagonal_attachment(g)
    restr = basis[diag]
    rank = int(np.linalg.matrix_rank(restr))
    if rank < restr.shape[1] or restr.shape[0] != restr.shape[1]:
        raise np.linalg.LinAlgError(
            f"diagonal restriction of Z_{m} has rank {rank} with shape {restr.shape}"
        )
    coef = np.linalg.solve(restr.T, basis.T).T
    value_sets = []
    for k in range(coef.shape[1]):
        col = coef[:, k]
        nz = col[np.abs(col) > 1e-8]
        value_sets.append(sorted(set(np.round(nz, 8).tolist())))
    checks = []
    nd = len(diag)
    for k in range(nd - 1):
        # V^(k): vertices attached at midpoints of [x_i, x_{i+1}], i ≤ k
        region = (attach % 2 == 1) & (attach // 2 <= k) & (attach >= 0)
        for j in range(nd):
            col = coef[:, j]
            if np.all(np.abs(col[diag[: k + 1]]) < 1e-9):
                checks.append((j, k, bool(np.all(np.abs(col[region]) < 1e-8))))
    return DiagonalCoefficients(m, diag, basis, coef, rank, value_sets, checks)
