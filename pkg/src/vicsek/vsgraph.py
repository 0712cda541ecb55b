"""Graph approximations of the Vicsek sets VS_n.

Vertices of the level-m graph live on the integer lattice
``{0, ..., D}^2`` with ``D = (2n-1)**m``, so vertex identity is exact.
Vertices are ordered so that the first ``3(4n-3)**k + 1`` entries are
exactly ``V_k`` for every ``k <= m``; a function on ``V_m`` restricts to
``V_k`` by slicing.

Map indexing: map 0 is the central cell, arms are numbered 1..4 toward
the corners q1=(0,0), q2=(1,0), q3=(1,1), q4=(0,1), and the cells of arm
``a`` get indices ``(a-1)(n-1)+1 .. a(n-1)`` moving outward.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence, Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

DEFAULT_VERTEX_BUDGET = 500_000
DENSE_BUDGET = 2000

# unit direction of each arm, counterclockwise starting at q1
ARM_DIRECTIONS = {1: (-1, -1), 2: (1, -1), 3: (1, 1), 4: (-1, 1)}
CORNER_OFFSETS = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=np.int64)

CENTER = "q0"


class BudgetError(RuntimeError):
    """Raised when a requested computation exceeds a size budget."""


class LevelMismatchError(ValueError):
    """A function was paired with a graph of a different level."""


def vertex_budget() -> int:
    return int(os.environ.get("VICSEK_VERTEX_BUDGET", DEFAULT_VERTEX_BUDGET))


@dataclass(frozen=True)
class VicsekParams:
    """Arm-length parameter ``n`` and the constants derived from it."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")

    @property
    def num_maps(self) -> int:
        return 4 * self.n - 3

    @property
    def scale(self) -> int:
        """Inverse contraction ratio 2n-1 (also the energy renormalization)."""
        return 2 * self.n - 1

    @property
    def rho(self) -> int:
        return (4 * self.n - 3) * (2 * self.n - 1)

    @property
    def alpha(self) -> float:
        return math.log(self.num_maps) / math.log(self.rho)

    def vertex_count(self, m: int) -> int:
        return 3 * self.num_maps**m + 1

    def map_grid(self) -> np.ndarray:
        """Grid position (in units of 1/(2n-1)) of each level-1 cell."""
        n = self.n
        c = n - 1
        grid = [(c, c)]
        for a in (1, 2, 3, 4):
            dx, dy = ARM_DIRECTIONS[a]
            for s in range(1, n):
                grid.append((c + s * dx, c + s * dy))
        return np.array(grid, dtype=np.int64)

    def map_arm(self, i: int) -> tuple[int, int]:
        """(arm, step) of map ``i``; the central map is (0, 0)."""
        if i == 0:
            return 0, 0
        a, s = divmod(i - 1, self.n - 1)
        return a + 1, s + 1


@dataclass(frozen=True)
class FunctionOnGraph:
    level: int
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class GraphApprox:
    """The level-``m`` graph Γ_m. Immutable once built."""

    params: VicsekParams
    level: int
    vertices: np.ndarray  # (N, 2) integer lattice coordinates over denominator D
    adjacency: sparse.csr_matrix
    degree: np.ndarray
    cells: np.ndarray  # (C, 4) corner indices in q1..q4 order
    words: np.ndarray  # (C, m) map indices, lexicographic
    boundary_ids: tuple = field(default=(0, 1, 2, 3))
    center_id: None = None  # q0 is never a lattice vertex; see center_cell

    @property
    def denominator(self) -> int:
        return self.params.scale**self.level

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i] : a.indptr[i + 1]]

    def num_vertices_at(self, k: int) -> int:
        """Length of the V_k prefix."""
        return self.params.vertex_count(k)

    @cached_property
    def weights(self) -> np.ndarray:
        """Measure weight of each vertex; sums to 1."""
        p = self.params
        return self.degree / (12.0 * float(p.num_maps) ** self.level)

    @cached_property
    def arms(self) -> np.ndarray:
        """Arm (1..4) containing each vertex, read off from its quadrant."""
        d = self.denominator
        right = 2 * self.vertices[:, 0] > d
        top = 2 * self.vertices[:, 1] > d
        out = np.empty(self.num_vertices, dtype=np.int64)
        out[~right & ~top] = 1
        out[right & ~top] = 2
        out[right & top] = 3
        out[~right & top] = 4
        return out

    @cached_property
    def center_cell(self) -> np.ndarray:
        """Corner indices of the central cell (word 0...0) at this level."""
        return self.cells[0]

    @cached_property
    def _sorted_keys(self) -> tuple[np.ndarray, np.ndarray]:
        d1 = self.denominator + 1
        keys = self.vertices[:, 0] * d1 + self.vertices[:, 1]
        order = np.argsort(keys)
        return keys[order], order

    def lookup(self, points) -> np.ndarray:
        """Vertex indices of an (k, 2) array of lattice points; KeyError if any is absent."""
        pts = np.asarray(points, dtype=np.int64).reshape(-1, 2)
        keys, order = self._sorted_keys
        want = pts[:, 0] * (self.denominator + 1) + pts[:, 1]
        pos = np.clip(np.searchsorted(keys, want), 0, len(keys) - 1)
        if not np.array_equal(keys[pos], want):
            raise KeyError("lattice point is not a vertex of this graph")
        return order[pos]

    def index_of(self, x: int, y: int) -> int:
        """Vertex index of lattice point (x, y); KeyError if absent."""
        return int(self.lookup([[x, y]])[0])

    def vertex_of_address(self, word: Sequence[int], corner: int) -> int:
        """Vertex index of F_word(q_corner), corner in 1..4.

        The word may be shorter than the level; it is padded through the
        lattice scale.
        """
        if len(word) > self.level:
            raise ValueError(f"address word longer than level {self.level}")
        if not 1 <= corner <= 4:
            raise ValueError("corner must be 1..4")
        grid = self.params.map_grid()
        s = self.params.scale
        origin = np.zeros(2, dtype=np.int64)
        for w in word:
            if not 0 <= w < self.params.num_maps:
                raise ValueError(f"map index {w} out of range")
            origin = origin * s + grid[w]
        size = s ** (self.level - len(word))
        pt = origin * size + CORNER_OFFSETS[corner - 1] * size
        return self.index_of(*pt)

    @cached_property
    def edges(self) -> np.ndarray:
        coo = sparse.triu(self.adjacency, k=1).tocoo()
        return np.column_stack([coo.row, coo.col])


def build_graph(params: VicsekParams | int, m: int, budget: int | None = None) -> GraphApprox:
    """Build Γ_m of VS_n with exact lattice deduplication."""
    if isinstance(params, int):
        params = VicsekParams(params)
    if m < 0:
        raise ValueError("level must be >= 0")
    budget = vertex_budget() if budget is None else budget
    nv = params.vertex_count(m)
    if nv > budget:
        raise BudgetError(f"Γ_{m} of VS_{params.n} has {nv} vertices, budget is {budget}")

    s = params.scale
    grid = params.map_grid()
    coords = CORNER_OFFSETS.copy()
    origins = np.zeros((1, 2), dtype=np.int64)
    words = np.zeros((1, 0), dtype=np.int64)
    for level in range(1, m + 1):
        d1 = s**level + 1
        coords = coords * s
        origins = (origins[:, None, :] * s + grid[None, :, :]).reshape(-1, 2)
        words = np.concatenate(
            [np.repeat(words, len(grid), axis=0), np.tile(np.arange(len(grid)), len(words))[:, None]],
            axis=1,
        )
        corners = (origins[:, None, :] + CORNER_OFFSETS[None, :, :]).reshape(-1, 2)
        allpts = np.concatenate([coords, corners])
        keys = allpts[:, 0] * d1 + allpts[:, 1]
        _, first = np.unique(keys, return_index=True)
        coords = allpts[np.sort(first)]

    d1 = s**m + 1
    keys = coords[:, 0] * d1 + coords[:, 1]
    order = np.argsort(keys)
    corners = (origins[:, None, :] + CORNER_OFFSETS[None, :, :]).reshape(-1, 2)
    ckeys = corners[:, 0] * d1 + corners[:, 1]
    cells = order[np.searchsorted(keys[order], ckeys)].reshape(-1, 4)

    pairs = np.array([(i, j) for i in range(4) for j in range(i + 1, 4)])
    rows = cells[:, pairs[:, 0]].ravel()
    cols = cells[:, pairs[:, 1]].ravel()
    nvert = len(coords)
    adj = sparse.coo_matrix(
        (np.ones(2 * len(rows)), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(nvert, nvert),
    ).tocsr()
    adj.sum_duplicates()
    if adj.nnz and adj.data.max() > 1:
        raise AssertionError("duplicate edge: cells overlap")
    degree = np.asarray(adj.sum(axis=1)).ravel().astype(np.int64)
    return GraphApprox(params, m, coords, adj, degree, cells, words)


@lru_cache(maxsize=32)
def cached_graph(n: int, m: int) -> GraphApprox:
    """Shared immutable Γ_m of VS_n."""
    return build_graph(VicsekParams(n), m)


Vertex = Union[int, str]


def _values(g: GraphApprox, u) -> np.ndarray:
    if isinstance(u, FunctionOnGraph):
        if u.level != g.level:
            raise LevelMismatchError(f"function on level {u.level}, graph on level {g.level}")
        u = u.values
    u = np.asarray(u, dtype=float)
    if u.shape[0] != g.num_vertices:
        raise LevelMismatchError(f"function has {u.shape[0]} values, graph has {g.num_vertices} vertices")
    return u


def inner_product(g: GraphApprox, u, v) -> float:
    """⟨u, v⟩_m = (1/4)(4n-3)^(-m) Σ_x (deg x / 3) u(x) v(x)."""
    return float(np.dot(g.weights * _values(g, u), _values(g, v)))


def graph_energy(g: GraphApprox, u, renormalized: bool = False) -> float:
    """E_m(u) = Σ_{x~y} |u(x) - u(y)|^2, each edge once.

    With ``renormalized`` the result is multiplied by (2n-1)^(-m).
    """
    u = _values(g, u)
    e = g.edges
    val = float(np.sum((u[e[:, 0]] - u[e[:, 1]]) ** 2))
    if renormalized:
        val /= float(g.params.scale) ** g.level
    return val


def laplacian_apply(g: GraphApprox, u) -> np.ndarray:
    """Δ_m u(x) = (1/deg x) Σ_{y~x} (u(y) - u(x)), boundary included."""
    u = _values(g, u)
    return (g.adjacency @ u) / g.degree - u


def _symmetrized(g: GraphApprox) -> np.ndarray:
    dinv = 1.0 / np.sqrt(g.degree.astype(float))
    a = g.adjacency.toarray()
    return np.eye(g.num_vertices) - dinv[:, None] * a * dinv[None, :]


def group_eigenvalues(vals: np.ndarray, rtol: float = 1e-9) -> list[tuple[float, int]]:
    out: list[list] = []
    for v in np.sort(vals):
        if out and abs(v - out[-1][0]) <= rtol * max(1.0, abs(v)):
            out[-1][1] += 1
            # running mean keeps the representative centred in the cluster
            out[-1][0] += (v - out[-1][0]) / out[-1][1]
        else:
            out.append([float(v), 1])
    return [(float(v), int(k)) for v, k in out]


def oracle_spectrum(g: GraphApprox, budget: int = DENSE_BUDGET, rtol: float = 1e-9) -> list[tuple[float, int]]:
    """Spectrum of -Δ_m by a dense symmetric eigensolve, grouped by value."""
    if g.num_vertices > budget:
        raise BudgetError(f"dense eigensolve of {g.num_vertices} vertices exceeds budget {budget}")
    vals = np.linalg.eigvalsh(_symmetrized(g))
    return group_eigenvalues(vals, rtol)


def oracle_eigenpairs(g: GraphApprox, budget: int = DENSE_BUDGET) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenfunctions of -Δ_m (columns, unit in ⟨·,·⟩_m)."""
    if g.num_vertices > budget:
        raise BudgetError(f"dense eigensolve of {g.num_vertices} vertices exceeds budget {budget}")
    vals, vecs = np.linalg.eigh(_symmetrized(g))
    funcs = vecs / np.sqrt(g.degree.astype(float))[:, None]
    norms = np.sqrt(np.einsum("i,ij,ij->j", g.weights, funcs, funcs))
    return vals, funcs / norms


def diagonal_vertices(g: GraphApprox, arm: int | str = 1) -> np.ndarray:
    """Vertices on a diagonal, ordered by position.

    ``arm`` in 1..4 selects one half-diagonal ordered from the corner
    inward (outside to center). ``"full"`` is the q1-q3 diagonal from q1 to
    q3 and ``"full24"`` the q2-q4 diagonal from q2 to q4.
    """
    d = g.denominator
    x, y = g.vertices[:, 0], g.vertices[:, 1]
    if arm in ("full", "full13"):
        idx = np.nonzero(x == y)[0]
        return idx[np.argsort(x[idx])]
    if arm == "full24":
        idx = np.nonzero(x + y == d)[0]
        return idx[np.argsort(-x[idx])]
    if arm not in (1, 2, 3, 4):
        raise ValueError(f"arm must be 1..4 or 'full', got {arm!r}")
    on = (x == y) if arm in (1, 3) else (x + y == d)
    idx = np.nonzero(on & (g.arms == arm))[0]
    cx, cy = CORNER_OFFSETS[arm - 1] * d
    dist = np.abs(x[idx] - cx)
    return idx[np.argsort(dist)]


def isometry_map(g: GraphApprox, perm: Sequence[int]) -> np.ndarray:
    """Vertex bijection Φ induced by sending arm i to arm perm[i-1].

    Each arm is carried to its image by a rotation about q0.
    """
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != [1, 2, 3, 4]:
        raise ValueError(f"not a permutation of the arms: {perm}")
    d = g.denominator
    x = g.vertices[:, 0].copy()
    y = g.vertices[:, 1].copy()
    turns = (np.array(perm)[g.arms - 1] - g.arms) % 4
    for _ in range(3):
        sel = turns > 0
        x[sel], y[sel] = d - y[sel], x[sel]
        turns[sel] -= 1
    return g.lookup(np.column_stack([x, y]))


def apply_isometry(g: GraphApprox, perm: Sequence[int], u) -> np.ndarray:
    """Return u ∘ Φ."""
    return _values(g, u)[isometry_map(g, perm)]


def edge_length(g: GraphApprox) -> float:
    """Skeleton length of one edge, with each main arm of length 1."""
    return 2.0 / float(g.params.scale) ** g.level


def distances_from(g: GraphApprox, v: Vertex) -> np.ndarray:
    """Geodesic distance along the skeleton from ``v`` (vertex or "q0") to every vertex."""
    if v == CENTER:
        corners = g.center_cell
        hops = csgraph.shortest_path(g.adjacency, unweighted=True, indices=list(corners)).min(axis=0)
        return hops * edge_length(g) + 1.0 / float(g.params.scale) ** g.level
    hops = csgraph.shortest_path(g.adjacency, unweighted=True, indices=[int(v)])[0]
    return hops * edge_length(g)


def geodesic_distance(g: GraphApprox, v: Vertex, w: Vertex) -> float:
    if v == CENTER and w == CENTER:
        return 0.0
    if v == CENTER:
        v, w = w, v
    return float(distances_from(g, w)[int(v)]) if w == CENTER else float(distances_from(g, v)[int(w)])
