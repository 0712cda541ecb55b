"""Closed-form Dirichlet Green's function on the Vicsek skeleton.

Points are described by where their geodesic to the centre meets the two
diagonals. With each arm (centre to corner) normalized to length 1, a point
x has an arm, a distance s = d'(x, q0) of its diagonal attachment point z
from the centre, and the tree distance from z to x. The Green's function
G(·, y) is linear along the path q0 - z - y, vanishes at the four corners,
and is constant on every tree hanging off that path.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .vsgraph import ARM_DIRECTIONS, FunctionOnGraph, GraphApprox, laplacian_apply

EQUAL_TOL = 1e-12


@dataclass(frozen=True)
class SkeletonPoint:
    """A point of the fractal described by its diagonal attachment.

    ``branch_path`` lists the skeleton nodes passed on the way from the
    attachment point into the hanging tree, as pairs (node coordinates,
    distance from the attachment point). It is only needed to compare two
    points hanging off the same attachment point.
    """

    arm: int
    s: float
    branch_offset: float = 0.0
    branch_path: tuple | None = None

    def __post_init__(self):
        if self.arm not in ARM_DIRECTIONS:
            raise ValueError(f"arm must be 1..4, got {self.arm}")
        if not -EQUAL_TOL <= self.s <= 1 + EQUAL_TOL:
            raise ValueError(f"diagonal distance must lie in [0, 1], got {self.s}")
        if self.branch_offset < 0:
            raise ValueError("branch offset must be ≥ 0")

    @classmethod
    def parse(cls, text: str) -> "SkeletonPoint":
        """Read "arm:A,s:S,off:T" (the offset part is optional)."""
        fields = dict(part.split(":", 1) for part in text.replace(" ", "").split(","))
        try:
            return cls(int(fields["arm"]), float(fields["s"]), float(fields.get("off", 0.0)))
        except KeyError as exc:
            raise ValueError(f"missing field {exc} in skeleton point {text!r}") from None


def _meeting_distance(x: SkeletonPoint, y: SkeletonPoint) -> float:
    """Distance from the common attachment point to where the paths to x and y part."""
    if x.branch_offset == 0 or y.branch_offset == 0:
        return 0.0
    if x.branch_path is None or y.branch_path is None:
        raise ValueError("points sharing an attachment point need branch paths")
    ny = dict(y.branch_path)
    common = [d for node, d in x.branch_path if node in ny]
    return float(max(common, default=0.0))


def green_eval(x: SkeletonPoint, y: SkeletonPoint) -> float:
    """G(x, y) for the Dirichlet problem with the four corners as boundary."""
    sx, sy = float(x.s), float(y.s)
    both_center = sx <= EQUAL_TOL and sy <= EQUAL_TOL
    if not both_center and x.arm != y.arm and min(sx, sy) > EQUAL_TOL:
        return (1 - sx) * (1 - sy) / 4
    if abs(sx - sy) <= EQUAL_TOL and (x.arm == y.arm or both_center):
        s = 0.5 * (sx + sy)
        return (1 - s) * (3 * s + 1) / 4 + _meeting_distance(x, y)
    lo, hi = min(sx, sy), max(sx, sy)
    return (1 - hi) * (3 * lo + 1) / 4


@dataclass(frozen=True)
class _Skeleton:
    """Skeleton tree of Γ_m: vertices plus one node at every cell centre."""

    coords: np.ndarray  # doubled lattice coordinates, one row per node
    tree: sparse.csr_matrix
    half: int  # doubled coordinate of the centre


@lru_cache(maxsize=8)
def _skeleton(g: GraphApprox) -> _Skeleton:
    nv = g.num_vertices
    centers = g.vertices[g.cells].sum(axis=1) // 2
    coords = np.vstack([2 * g.vertices, centers])
    rows = np.repeat(nv + np.arange(len(g.cells)), 4)
    cols = g.cells.ravel()
    tree = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(coords),) * 2).tocsr()
    return _Skeleton(coords, (tree + tree.T).tocsr(), int(g.denominator))


@lru_cache(maxsize=8)
def skeleton_points(g: GraphApprox) -> tuple:
    """SkeletonPoint of every vertex of Γ_m, in normalized arm length."""
    sk = _skeleton(g)
    d = sk.half
    x2, y2 = sk.coords[:, 0], sk.coords[:, 1]
    on_diag = np.nonzero((x2 == y2) | (x2 + y2 == 2 * d))[0]
    dist, pred, src = csgraph.dijkstra(sk.tree, directed=False, indices=on_diag, min_only=True, return_predecessors=True)
    out = []
    for v in range(g.num_vertices):
        z = int(src[v])
        dx, dy = int(np.sign(sk.coords[z, 0] - d)), int(np.sign(sk.coords[z, 1] - d))
        arm = next((a for a, dirn in ARM_DIRECTIONS.items() if dirn == (dx, dy)), 1)
        s = abs(int(sk.coords[z, 0]) - d) / d
        off = float(dist[v]) / d
        path = None
        if off > 0:
            nodes, cur = [], v
            while cur != z:
                key = (Fraction(int(sk.coords[cur, 0]), 2 * d), Fraction(int(sk.coords[cur, 1]), 2 * d))
                nodes.append((key, float(dist[cur]) / d))
                cur = int(pred[cur])
            path = tuple(reversed(nodes))
        out.append(SkeletonPoint(arm, s, off, path))
    return tuple(out)


def green_field(g: GraphApprox, y) -> FunctionOnGraph:
    """G(·, y) at every vertex of Γ_m; ``y`` is a SkeletonPoint or a vertex index."""
    pts = skeleton_points(g)
    yp = pts[int(y)] if not isinstance(y, SkeletonPoint) else y
    return FunctionOnGraph(g.level, np.array([green_eval(p, yp) for p in pts]))


def breakpoint_vertices(g: GraphApprox, y) -> np.ndarray:
    """Vertices where G(·, y) may fail to be harmonic.

    These are the boundary and the skeleton nodes at or next to the centre,
    the attachment point z and y. A cell-centre node is replaced by the
    corners of its cell, since cell centres are not vertices.
    """
    pts = skeleton_points(g)
    yp = pts[int(y)] if not isinstance(y, SkeletonPoint) else y
    sk = _skeleton(g)
    d = sk.half
    dirn = np.array(ARM_DIRECTIONS[yp.arm])
    marks = [np.array([d, d], dtype=float), np.array([d, d]) + dirn * yp.s * d]
    if not isinstance(y, SkeletonPoint):
        marks.append(sk.coords[int(y)])
    nv = g.num_vertices
    hit = set(int(b) for b in g.boundary_ids)
    for mark in marks:
        # the node itself, or both ends of the skeleton edge through the point
        near = np.max(np.abs(sk.coords - mark), axis=1) < 1 - EQUAL_TOL
        for node in np.nonzero(near)[0]:
            if node < nv:
                hit.add(int(node))
            else:
                hit.update(int(c) for c in g.cells[node - nv])
    return np.array(sorted(hit))


def harmonicity_defect(g: GraphApprox, y) -> float:
    """max |Δ_m G(·, y)| off the breakpoints, relative to max |G(·, y)|."""
    vals = green_field(g, y).values
    lap = laplacian_apply(g, vals)
    mask = np.ones(g.num_vertices, dtype=bool)
    mask[breakpoint_vertices(g, y)] = False
    return float(np.max(np.abs(lap[mask])) / np.max(np.abs(vals)))


@dataclass(frozen=True)
class GreenResiduals:
    """Values a = G(q0, y), b = G(z, y), c = G(y, y) and the defining residuals."""

    a: float
    b: float
    c: float
    at_center: float
    at_attachment: float
    at_point: float

    def max_abs(self) -> float:
        return max(abs(self.at_center), abs(self.at_attachment), abs(self.at_point))


def green_verify(y: SkeletonPoint) -> GreenResiduals:
    """Check the flux balance of G(·, y) at q0, at z and at y.

    At q0 three arms of slope a and the segment towards z balance. At z the
    segments towards q0, the corner and y balance. At y the unit source
    gives c = b + t. When y lies on the diagonal (t = 0) the source sits at
    z, so the second balance equals 1 and c = b.
    """
    s, t = float(y.s), float(y.branch_offset)
    if not 0 < s < 1:
        raise ValueError("the diagonal distance must lie strictly between 0 and 1")
    on_diag = SkeletonPoint(y.arm, s)
    a = green_eval(SkeletonPoint(1 if y.arm != 1 else 2, 0.0), y)
    b = green_eval(on_diag, y)
    c = green_eval(y, y)
    r1 = 3 * a + (a - b) / s
    if t > 0:
        r2 = (b - a) / s + b / (1 - s) + (b - c) / t
        r3 = (c - b) / t - 1
    else:
        r2 = (b - a) / s + b / (1 - s) - 1
        r3 = c - b
    return GreenResiduals(a, b, c, r1, r2, r3)


def green_verify_grid(count: int = 20) -> float:
    """Largest residual of green_verify over a count × count grid of (s, t)."""
    worst = 0.0
    for s in np.linspace(0, 1, count + 2)[1:-1]:
        for t in np.linspace(0, 1, count):
            path = ((("probe", float(t)),) if t > 0 else None)
            worst = max(worst, green_verify(SkeletonPoint(1, float(s), float(t), path)).max_abs())
    return worst
