"""Ratio-gap certificates and spectral-clustering certificates.

Every positive fractal eigenvalue has the form ρ^r ψ_n(x) with x in the
image of [0, q] ∪ {4/3} under some composition of ℓ branches, where
q = φ_{2n-1}(4/3). Ratios of two such eigenvalues therefore lie in a
finite union of scaled intervals, and anything in [1, ρ] outside that
union is a certified ratio gap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import mpmath
import numpy as np
from scipy.optimize import brentq

from .decimation import FOUR_THIRDS, DecimationSystem, EigenvalueRecord, PreciseBranches, Series, _system, enumerate_spectrum, make_record, word_admissible
from .vsgraph import BudgetError, VicsekParams

SLACK = 1e-9
WORD_BUDGET = 20_000
STREAM_CHUNK = 4096


@dataclass(frozen=True)
class RatioInterval:
    """ψ-image of one piece of the branch-word cover.

    ``kind`` is "interval" for ψ(φ_w([0, q])), or "zero" / "fourthirds"
    for the singletons ψ(φ_w(0)) and ψ(φ_w(4/3)).
    """

    lo: float
    hi: float
    word: tuple
    kind: str


@dataclass(frozen=True)
class CoverPiece:
    """One scaled covering interval ρ^r [ψa_i/ψb_j, ψb_i/ψa_j]."""

    lo: float
    hi: float
    numerator: int
    denominator: int
    power: int


@dataclass
class GapCertificate:
    n: int
    ell: int
    gaps: list  # open intervals (lo, hi) inside [1, ρ]
    bounding: list  # (left cover, right cover) per gap
    covering_interval_count: int
    pieces: list = field(default_factory=list, repr=False)

    def contains(self, x: float) -> bool:
        return any(lo < x < hi for lo, hi in self.gaps)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "ell": self.ell,
            "gaps": [[lo, hi] for lo, hi in self.gaps],
            "covering_interval_count": self.covering_interval_count,
        }


def _words(n: int, ell: int) -> Iterator[tuple]:
    return itertools.product(range(1, 2 * n), repeat=ell)


def _check_budget(n: int, ell: int, budget: int):
    if ell < 1:
        raise ValueError("word length must be ≥ 1")
    count = (2 * n - 1) ** ell
    if count > budget:
        raise BudgetError(f"{count} words of length {ell} exceed the budget {budget}; use gap_containing to stream them")


def _apply_words(sys: DecimationSystem, words: np.ndarray, start) -> np.ndarray:
    """φ_w(start) for every row w of ``words``, letter by letter."""
    x = np.broadcast_to(np.asarray(start, dtype=float), (len(words),)).copy()
    for pos in range(words.shape[1]):
        for j in range(1, sys.num_branches + 1):
            mask = words[:, pos] == j
            if mask.any():
                x[mask] = sys.branch(j, x[mask])
    return x


def _raw_pieces(sys: DecimationSystem, words: Sequence[tuple]) -> list[tuple]:
    """(x_lo, x_hi, word, kind) before mapping through ψ."""
    n = sys.n
    q = sys.fixed_points()[1]
    arr = np.array(words, dtype=int)
    at_zero = _apply_words(sys, arr, 0.0)
    at_q = _apply_words(sys, arr, q)
    at_top = _apply_words(sys, arr, FOUR_THIRDS)
    out = []
    for w, a, b, top in zip(words, at_zero, at_q, at_top):
        if w[-1] == 1:
            # the whole history is shorter than ℓ, so the start is 0 or 4/3;
            # a start whose branch sequence meets a forbidden value is dropped
            if word_admissible(Series.ZERO, w, n) and any(j != 1 for j in w):
                out.append((a, a, w, "zero"))
            if word_admissible(Series.FOUR_THIRDS, w, n):
                out.append((top, top, w, "fourthirds"))
        else:
            out.append((min(a, b), max(a, b), w, "interval"))
            out.append((top, top, w, "fourthirds"))
    return out


def _psi_pieces(sys: DecimationSystem, raw: list[tuple]) -> list[RatioInterval]:
    if not raw:
        return []
    xs = np.array([[r[0], r[1]] for r in raw])
    ps = sys.psi(xs.ravel()).reshape(xs.shape)
    return [RatioInterval(float(p[0]), float(p[1]), r[2], r[3]) for p, r in zip(ps, raw)]


def ratio_intervals(sys, ell: int, budget: int = WORD_BUDGET) -> list[RatioInterval]:
    """ψ-images of the branch-word cover for all words of length ℓ."""
    sys = _system(sys)
    _check_budget(sys.n, ell, budget)
    return _psi_pieces(sys, _raw_pieces(sys, list(_words(sys.n, ell))))


def _scaled_covers(lo_i, hi_i, lo_j, hi_j, rho: float):
    """All ρ^r [lo_i/hi_j, hi_i/lo_j] meeting [1, ρ]; arrays (L, U, i, j, r)."""
    lower = lo_i[:, None] / hi_j[None, :]
    upper = hi_i[:, None] / lo_j[None, :]
    lr = math.log(rho)
    r_min = np.ceil(-np.log(upper) / lr - 1e-12).astype(int)
    r_max = np.floor(1 - np.log(lower) / lr + 1e-12).astype(int)
    parts = []
    for r in range(int(r_min.min()), int(r_max.max()) + 1):
        L = lower * rho**r
        U = upper * rho**r
        mask = (U >= 1 - SLACK) & (L <= rho + SLACK)
        ii, jj = np.nonzero(mask)
        if len(ii):
            parts.append((L[ii, jj], U[ii, jj], ii, jj, np.full(len(ii), r)))
    if not parts:
        empty = np.empty(0)
        return empty, empty, empty.astype(int), empty.astype(int), empty.astype(int)
    return tuple(np.concatenate(c) for c in zip(*parts))


def _widen(lo, hi):
    return lo - SLACK * np.maximum(1.0, np.abs(lo)), hi + SLACK * np.maximum(1.0, np.abs(hi))


def ratio_gaps(sys, ell: int, budget: int = WORD_BUDGET) -> GapCertificate:
    """Complement in [1, ρ] of the union of all scaled ratio intervals."""
    sys = _system(sys)
    rho = float(sys.rho)
    pieces = ratio_intervals(sys, ell, budget)
    lo = np.array([p.lo for p in pieces])
    hi = np.array([p.hi for p in pieces])
    L, U, ii, jj, rr = _scaled_covers(lo, hi, lo, hi, rho)
    L, U = _widen(L, U)
    order = np.argsort(L, kind="stable")
    gaps, bounding = [], []
    reach = 1.0
    reach_idx = None
    for k in order:
        if L[k] > reach and reach < rho:
            g_hi = min(L[k], rho)
            gaps.append((float(reach), float(g_hi)))
            bounding.append((_cover(reach_idx, L, U, ii, jj, rr), _cover(k, L, U, ii, jj, rr)))
        if U[k] > reach:
            reach, reach_idx = U[k], k
        if reach >= rho:
            break
    if reach < rho:
        gaps.append((float(reach), rho))
        bounding.append((_cover(reach_idx, L, U, ii, jj, rr), None))
    return GapCertificate(sys.n, ell, gaps, bounding, int(len(L)), pieces)


def _cover(k, L, U, ii, jj, rr):
    if k is None:
        return None
    return CoverPiece(float(L[k]), float(U[k]), int(ii[k]), int(jj[k]), int(rr[k]))


def _word_chunks(n: int, ell: int, size: int) -> Iterator[list]:
    it = _words(n, ell)
    while True:
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return
        yield chunk


def gap_containing(sys, ell: int, point: float, chunk: int = STREAM_CHUNK):
    """Largest certified gap (lo, hi) around ``point``, or None if it is covered.

    Words are generated in chunks and the pairwise scan never holds more
    than two chunks of intervals at once.
    """
    sys = _system(sys)
    if ell < 1:
        raise ValueError("word length must be ≥ 1")
    rho = float(sys.rho)
    if not 1 <= point <= rho:
        raise ValueError(f"point must lie in [1, {rho}]")
    lr = math.log(rho)
    best_lo, best_hi = 1.0, rho
    for outer in _word_chunks(sys.n, ell, chunk):
        pi = _psi_pieces(sys, _raw_pieces(sys, outer))
        if not pi:
            continue
        lo_i = np.array([p.lo for p in pi])
        hi_i = np.array([p.hi for p in pi])
        for inner in _word_chunks(sys.n, ell, chunk):
            pj = _psi_pieces(sys, _raw_pieces(sys, inner))
            if not pj:
                continue
            lo_j = np.array([p.lo for p in pj])
            hi_j = np.array([p.hi for p in pj])
            lower = lo_i[:, None] / hi_j[None, :]
            upper = hi_i[:, None] / lo_j[None, :]
            # the scaled copy whose lower end is the first one at or above the point
            r = np.ceil(np.log(point / lower) / lr - 1e-12)
            for shift in (-1.0, 0.0):
                L, U = _widen(lower * rho ** (r + shift), upper * rho ** (r + shift))
                if np.any((L <= point) & (point <= U)):
                    return None
                below = U[U < point]
                above = L[L > point]
                if below.size:
                    best_lo = max(best_lo, float(below.max()))
                if above.size:
                    best_hi = min(best_hi, float(above.min()))
    return best_lo, best_hi


def reduce_ratio(x: np.ndarray, rho: float) -> np.ndarray:
    """Bring positive ratios into [1, ρ) by integer powers of ρ."""
    x = np.asarray(x, dtype=float)
    k = np.floor(np.log(x) / math.log(rho) + 1e-13)
    return x / rho**k


def soundness_violations(cert: GapCertificate, depth: int = 4) -> int:
    """Number of enumerated eigenvalue ratios falling inside a certified gap."""
    table = enumerate_spectrum(cert.n, depth)
    vals = np.unique(table.values[table.values > 0])
    rho = float(VicsekParams(cert.n).rho)
    count = 0
    for i in range(0, len(vals), 1024):
        ratios = reduce_ratio((vals[i : i + 1024, None] / vals[None, :]).ravel(), rho)
        for lo, hi in cert.gaps:
            count += int(np.sum((ratios > lo) & (ratios < hi)))
    return count


# clustering


@dataclass(frozen=True)
class ClusteringCertificate:
    n: int
    t: float
    rprime: float
    rho: int
    certified: bool

    def to_json(self) -> dict:
        return {"n": self.n, "t": self.t, "rprime": self.rprime, "rho": self.rho, "certified": self.certified}


def clustering_certificate(sys) -> ClusteringCertificate:
    """Largest fixed point t of R in (0, 4/3) and the test |R'(t)| > ρ."""
    sys = _system(sys)
    grid = np.linspace(0.0, FOUR_THIRDS, 4001)[1:-1]
    vals = sys.R(grid) - grid
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if not len(idx):
        raise ArithmeticError("R has no fixed point in (0, 4/3)")
    i = idx[-1]
    t = brentq(lambda x: sys.R(x) - x, grid[i], grid[i + 1], xtol=1e-16, rtol=4 * np.finfo(float).eps)
    d = sys.dR(t)
    return ClusteringCertificate(sys.n, float(t), float(d), sys.rho, bool(abs(d) > sys.rho))


@dataclass
class ClusterDemo:
    """Distinct eigenvalues packed into a short interval.

    ``values`` are mpmath numbers in increasing order; the eigenvalues grow
    like ρ^(level + j) so double precision cannot resolve their spread.
    """

    values: list
    records: list
    seed_level: int
    repeats: int
    spread: object
    precision: int


def _seed_words(n: int, count: int) -> tuple[int, list]:
    for m in itertools.count(1):
        words = [w for w in _words(n, m) if word_admissible(Series.ZERO, w, n) and any(j != 1 for j in w)]
        if len(words) >= count:
            return m, words[:count]


def cluster_demo(sys, count: int, eps: float, max_repeats: int = 5000) -> ClusterDemo:
    """At least ``count`` distinct 0-series eigenvalues inside an interval of length ε.

    Seeds are 0-series graph eigenvalues on one level; the branch through
    the repelling fixed point of R is applied j times to each, which pulls
    the eigenvalues together whenever the clustering certificate holds.
    """
    sys = _system(sys)
    if count < 1:
        raise ValueError("count must be ≥ 1")
    cert = clustering_certificate(sys)
    if not cert.certified:
        raise ValueError(f"clustering is not certified for n = {sys.n}")
    k = int(np.searchsorted(sys.branch_brackets[:, 1], cert.t)) + 1
    m, seeds = _seed_words(sys.n, count)
    rho = sys.rho
    if count == 1:
        rec = make_record(sys, Series.ZERO, 0, seeds[0])
        return ClusterDemo([mpmath.mpf(rec.value)], [rec], m, 0, mpmath.mpf(0), mpmath.mp.dps)
    # spread shrinks by about ρ/R'(t) per repeat
    x0 = [sys.apply_word(w, 0.0) for w in seeds]
    v0 = [rho**m * sys.psi(x) for x in x0]
    spread0 = max(v0) - min(v0)
    rate = rho / abs(cert.rprime)
    j = max(0, math.ceil(math.log(eps / spread0) / math.log(rate))) if spread0 > eps else 0
    while j <= max_repeats:
        digits = int((m + j) * math.log10(rho) - math.log10(eps)) + 30
        with mpmath.workdps(digits):
            br = PreciseBranches(sys)
            vals = []
            for w in seeds:
                x = mpmath.mpf(0)
                for letter in list(w) + [k] * j:
                    x = br.branch(letter, x)
                vals.append(mpmath.mpf(rho) ** (m + j) * br.psi(x))
            order = sorted(range(count), key=lambda i: vals[i])
            vals = [vals[i] for i in order]
            spread = vals[-1] - vals[0]
            distinct = all(b > a for a, b in zip(vals, vals[1:]))
            if spread <= eps and distinct:
                records = [_demo_record(sys, seeds[i], k, j) for i in order]
                return ClusterDemo([+v for v in vals], records, m, j, +spread, digits)
        j = max(j + 1, int(j * 1.1))
    raise ArithmeticError(f"could not reach spread {eps}; last spread {mpmath.nstr(spread, 6)}")


def _demo_record(sys: DecimationSystem, seed: tuple, k: int, j: int) -> EigenvalueRecord:
    """Record for the seed word followed by j copies of branch k (value in double precision)."""
    word = tuple(seed) + (k,) * j
    if j <= 60:
        return make_record(sys, Series.ZERO, 0, word)
    return EigenvalueRecord(Series.ZERO, 0, word, math.inf, 1, sys.n)
