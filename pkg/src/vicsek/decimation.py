"""Spectral decimation for VS_n.

The decimation polynomial is ``R(λ) = λ g_n(λ) h_n(λ)`` where, in the
variable ``y = 3λ - 1``,

* ``f_n = T_n - 3 T_{n-1}``
* ``g_n = U_{n-1} - U_{n-2}``
* ``h_n = U_{n-1} - 3 U_{n-2}``

with T, U the Chebyshev polynomials of the first and second kind.
An eigenvalue λ_{m-1} of -Δ_{m-1} continues to λ_m = φ_j(λ_{m-1}) for one
of the 2n-1 inverse branches φ_1 < φ_2 < ... of R. Fractal eigenvalues
are limits ρ^m λ_m, expressed through ψ_n(t) = lim ρ^m φ_1^(m)(t).
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import mpmath
import numpy as np
from scipy.optimize import brentq

from .vsgraph import BudgetError, VicsekParams, build_graph

FOUR_THIRDS = 4.0 / 3.0
FORBIDDEN_TOL = 1e-12
DEFAULT_RECORD_BUDGET = 2_000_000


class ForbiddenEigenvalueError(ValueError):
    """Raised when an extension is requested at a forbidden eigenvalue."""


class Series(str, enum.Enum):
    ZERO = "zero"
    FOUR_THIRDS = "fourthirds"


# --------------------------------------------------------------------------
# exact polynomial helpers (coefficient lists, lowest degree first)


def _pmul(a: Sequence, b: Sequence) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _padd(a: Sequence, b: Sequence, cb=1) -> list:
    out = [0] * max(len(a), len(b))
    for i, x in enumerate(a):
        out[i] += x
    for i, y in enumerate(b):
        out[i] += cb * y
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def _pdivmod(num: Sequence, den: Sequence) -> tuple[list, list]:
    num = [Fraction(x) for x in num]
    den = [Fraction(x) for x in den]
    q = [Fraction(0)] * max(1, len(num) - len(den) + 1)
    while len(num) >= len(den) and any(num):
        shift = len(num) - len(den)
        c = num[-1] / den[-1]
        q[shift] = c
        for i, d in enumerate(den):
            num[i + shift] -= c * d
        num.pop()
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    return q, num


def _chebyshev_polys(n: int) -> dict:
    """Exact integer coefficients in λ of T_k(3λ-1), U_k(3λ-1) for k ≤ n."""
    y = [-1, 3]
    t = [[1], y]
    u = [[1], [-2, 6]]
    for k in range(2, n + 1):
        t.append(_padd(_pmul([-2, 6], t[k - 1]), t[k - 2], -1))
        u.append(_padd(_pmul([-2, 6], u[k - 1]), u[k - 2], -1))
    return {"T": t, "U": u}


def _uprev(u: list, k: int) -> list:
    return [0] if k < 0 else u[k]


# --------------------------------------------------------------------------
# numerical Chebyshev evaluation


def _cheb_eval(y: np.ndarray, k: int) -> tuple:
    """Return T_k, T_{k-1}, U_{k-1}, U_{k-2} and their y-derivatives."""
    # U_{-1} = 0, U_0 = 1; T_0 = 1, T_1 = y
    u_prev, u_cur = np.zeros_like(y), np.ones_like(y)
    du_prev, du_cur = np.zeros_like(y), np.zeros_like(y)
    t_prev, t_cur = np.ones_like(y), y.copy()
    dt_prev, dt_cur = np.zeros_like(y), np.ones_like(y)
    # after the loop u_cur = U_{k-1}, u_prev = U_{k-2}; t_cur = T_k, t_prev = T_{k-1}
    for _ in range(k - 1):
        u_prev, u_cur, du_prev, du_cur = (
            u_cur,
            2 * y * u_cur - u_prev,
            du_cur,
            2 * u_cur + 2 * y * du_cur - du_prev,
        )
        t_prev, t_cur, dt_prev, dt_cur = (
            t_cur,
            2 * y * t_cur - t_prev,
            dt_cur,
            2 * t_cur + 2 * y * dt_cur - dt_prev,
        )
    return t_cur, t_prev, u_cur, u_prev, dt_cur, dt_prev, du_cur, du_prev


@dataclass(frozen=True, eq=False)
class DecimationSystem:
    """Decimation data of VS_n: polynomials, branches and critical points."""

    params: VicsekParams

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def rho(self) -> int:
        return self.params.rho

    @property
    def num_branches(self) -> int:
        return 2 * self.n - 1

    # exact coefficients --------------------------------------------------
    @cached_property
    def exact_polys(self) -> dict:
        n = self.n
        ch = _chebyshev_polys(n)
        t, u = ch["T"], ch["U"]
        f = _padd(t[n], t[n - 1], -3)
        g = _padd(u[n - 1], _uprev(u, n - 2), -1)
        h = _padd(u[n - 1], _uprev(u, n - 2), -3)
        r = _pmul([0, 1], _pmul(g, h))
        l, rem = _pdivmod(_padd(_pmul([3], r), [4], -1), f)
        if any(rem):
            raise ArithmeticError("3R-4 is not divisible by f")
        return {"f": f, "g": g, "h": h, "R": r, "l": l}

    # numerical evaluation --------------------------------------------------
    def _fgh(self, lam):
        lam = np.asarray(lam, dtype=float)
        y = 3 * lam - 1
        n = self.n
        t_n, t_n1, u1, u2, dt_n, dt_n1, du1, du2 = _cheb_eval(y, n)
        f = t_n - 3 * t_n1
        g = u1 - u2
        h = u1 - 3 * u2
        # chain rule dy/dλ = 3
        return f, g, h, 3 * (dt_n - 3 * dt_n1), 3 * (du1 - du2), 3 * (du1 - 3 * du2)

    def eval_fgh(self, lam):
        f, g, h, *_ = self._fgh(lam)
        return f, g, h

    def eval_R(self, lam):
        """Value and derivative of R at λ (scalar or array)."""
        lam_arr = np.asarray(lam, dtype=float)
        _, g, h, _, dg, dh = self._fgh(lam_arr)
        val = lam_arr * g * h
        der = g * h + lam_arr * (dg * h + g * dh)
        if np.ndim(lam) == 0:
            return float(val), float(der)
        return val, der

    def R(self, lam):
        return self.eval_R(lam)[0]

    def dR(self, lam):
        return self.eval_R(lam)[1]

    # critical points and branches ----------------------------------------
    @cached_property
    def critical_points(self) -> np.ndarray:
        """The 2n-2 roots of R' in (0, 4/3), ascending."""
        n = self.n
        theta = np.linspace(math.pi, 0.0, 400 * n + 1)
        grid = np.unique(np.concatenate([(np.cos(theta) + 1) / 3, np.linspace(2 / 3, 4 / 3, 4001)]))
        d = self.dR(grid)
        roots = []
        for i in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) <= 0)[0]:
            a, b = grid[i], grid[i + 1]
            if d[i] == 0:
                roots.append(a)
                continue
            if d[i + 1] == 0:
                continue
            roots.append(brentq(self.dR, a, b, xtol=1e-16, rtol=4 * np.finfo(float).eps))
        roots = np.array(sorted(set(roots)))
        if len(roots) != 2 * n - 2:
            raise ArithmeticError(f"found {len(roots)} critical points of R, expected {2 * n - 2}")
        return roots

    @cached_property
    def branch_brackets(self) -> np.ndarray:
        """Bracket [c_{j-1}, c_j] for each branch j = 1..2n-1 (row j-1)."""
        c = np.concatenate([[0.0], self.critical_points, [FOUR_THIRDS]])
        return np.column_stack([c[:-1], c[1:]])

    def branch_range(self, j: int) -> tuple[float, float]:
        lo, hi = self.branch_brackets[j - 1]
        a, b = self.R(lo), self.R(hi)
        return min(a, b), max(a, b)

    def branch(self, j: int, mu, check: bool = True):
        """φ_j(μ): the solution of R(λ) = μ on the j-th monotone piece."""
        if not 1 <= j <= self.num_branches:
            raise ValueError(f"branch index must be 1..{self.num_branches}, got {j}")
        mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
        lo, hi = self.branch_brackets[j - 1]
        if check:
            rlo, rhi = self.branch_range(j)
            slack = 1e-12 * max(1.0, abs(rhi))
            if np.any(mu_arr < rlo - slack) or np.any(mu_arr > rhi + slack):
                raise ValueError(f"μ outside the range [{rlo}, {rhi}] of branch {j}")
        sign = 1.0 if j % 2 == 1 else -1.0
        a = np.full_like(mu_arr, lo)
        b = np.full_like(mu_arr, hi)
        for _ in range(64):
            mid = 0.5 * (a + b)
            above = sign * (self.R(mid) - mu_arr) > 0
            b = np.where(above, mid, b)
            a = np.where(above, a, mid)
        x = 0.5 * (a + b)
        # Newton polish keeps relative accuracy near λ = 0
        for _ in range(4):
            val, der = self.eval_R(x)
            ok = der != 0
            step = np.where(ok, (val - mu_arr) / np.where(ok, der, 1.0), 0.0)
            nx = x - step
            inside = (nx >= lo) & (nx <= hi)
            x = np.where(inside, nx, x)
        if np.ndim(mu) == 0:
            return float(x[0])
        return x

    def apply_word(self, word: Sequence[int], start):
        """φ_{w_k} ∘ ... ∘ φ_{w_1}(start), with w_1 applied first."""
        x = start
        for j in word:
            x = self.branch(j, x)
        return x

    # ψ ---------------------------------------------------------------------
    def psi(self, t, tol: float = 1e-13, max_iter: int = 200):
        """ψ_n(t) = lim ρ^m φ_1^(m)(t), vectorized over t."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        x = t_arr.copy()
        acc = t_arr.copy()
        scale = 1.0
        converged = False
        for _ in range(max_iter):
            x = self.branch(1, x, check=False)
            scale *= self.rho
            new = scale * x
            nz = acc != 0
            change = np.abs(new - acc)
            rel = np.where(nz, change / np.where(nz, np.abs(acc), 1.0), change)
            acc = new
            if np.all(rel < tol):
                converged = True
                break
            if not np.all(np.isfinite(x)) or np.all(x == 0):
                break
        if not converged and not np.all(acc == 0):
            raise ArithmeticError("ψ iteration did not converge")
        if np.ndim(t) == 0:
            return float(acc[0])
        return acc

    # forbidden set -----------------------------------------------------------
    @cached_property
    def g_roots(self) -> np.ndarray:
        n = self.n
        j = np.arange(1, n)
        return np.sort(2.0 / 3.0 * np.sin(np.pi * j / (2 * n - 1)) ** 2)

    @cached_property
    def f_roots(self) -> np.ndarray:
        """Zeros of f_n: φ_{2j}(4/3) for j=1..n-1 and φ_{2n-1}(4/3)."""
        vals = [self.branch(2 * j, FOUR_THIRDS) for j in range(1, self.n)]
        vals.append(self.branch(2 * self.n - 1, FOUR_THIRDS))
        return np.sort(np.array(vals))

    @cached_property
    def h_roots(self) -> np.ndarray:
        return np.sort(np.array([self.branch(2 * j + 1, 0.0) for j in range(1, self.n)]))

    @cached_property
    def l_roots(self) -> np.ndarray:
        n = self.n
        j = np.arange(1, n)
        return 2.0 / 3.0 * np.sin(np.pi * (2 * j - 1) / (2 * (2 * n - 1))) ** 2

    def forbidden_set(self) -> list[float]:
        """{4/3} ∪ zeros(f_n) ∪ zeros(g_n), sorted."""
        vals = sorted(set([FOUR_THIRDS, *self.f_roots.tolist(), *self.g_roots.tolist()]))
        return vals

    def is_forbidden(self, lam: float, tol: float = FORBIDDEN_TOL) -> bool:
        return any(abs(lam - v) <= tol * max(1.0, abs(v)) for v in self.forbidden_set())

    # extension ---------------------------------------------------------------
    @cached_property
    def _cell_graph(self):
        return build_graph(self.params, 1)

    def extension_matrix(self, lam: float, allow_forbidden: bool = False) -> np.ndarray:
        """Matrix sending the 4 corner values of a cell to its interior values.

        Rows follow the vertex order of the level-1 graph after its four
        corners. With ``allow_forbidden`` a forbidden value is accepted when
        the matrix has a finite limit there: for n = 2 the rational closed
        form is continuous at 4/3 even though the interior system is
        singular; otherwise the interior system must be nonsingular.
        """
        forbidden = self.is_forbidden(lam)
        if forbidden and not allow_forbidden:
            raise ForbiddenEigenvalueError(f"λ = {lam!r} is a forbidden eigenvalue of VS_{self.n}")
        if forbidden and self.n == 2:
            a, b, c, d, gamma = extension_coefficients(lam)
            if not math.isfinite(gamma) or abs(gamma) > 1e12:
                raise ForbiddenEigenvalueError(f"extension matrix has no finite value at λ = {lam!r}")
            return self.extension_matrix_closed_form(lam)
        g = self._cell_graph
        a = g.adjacency.toarray()
        interior = np.arange(4, g.num_vertices)
        lhs = np.diag(g.degree[interior] * (1.0 - lam)) - a[np.ix_(interior, interior)]
        rhs = a[np.ix_(interior, np.arange(4))]
        try:
            sol = np.linalg.solve(lhs, rhs)
        except np.linalg.LinAlgError as exc:
            raise ForbiddenEigenvalueError(f"interior system singular at λ = {lam!r}") from exc
        if np.linalg.cond(lhs) > 1e13:
            raise ForbiddenEigenvalueError(f"interior system numerically singular at λ = {lam!r}")
        return sol

    def extension_matrix_closed_form(self, lam: float) -> np.ndarray:
        """Explicit extension matrix for n = 2 via the coefficients a, b, c, d, γ."""
        if self.n != 2:
            raise ValueError("closed form only available for n = 2")
        a, b, c, d, gamma = extension_coefficients(lam)
        g = self._cell_graph
        rows = []
        for v in range(4, g.num_vertices):
            arm = int(g.arms[v])
            junction = g.degree[v] == 6
            near, far = (b, d) if junction else (a, c)
            rows.append([near if k == arm else far for k in (1, 2, 3, 4)])
        return gamma * np.array(rows, dtype=float)

    # special points ------------------------------------------------------------
    def fixed_points(self) -> tuple[float, float, float]:
        """(p, q, t_max): fixed point of φ_{2n-1}, φ_{2n-1}(4/3), largest fixed point of R."""
        lo = self.critical_points[-1]
        t_max = brentq(lambda x: self.R(x) - x, lo, FOUR_THIRDS, xtol=1e-16, rtol=4 * np.finfo(float).eps)
        p = t_max
        q = self.branch(2 * self.n - 1, FOUR_THIRDS)
        if q < p - 1e-13:
            raise ArithmeticError("expected φ_{2n-1}(4/3) ≥ fixed point")
        return p, q, t_max


def extension_coefficients(lam: float) -> tuple[float, float, float, float, float]:
    """(a, b, c, d, γ) of the n = 2 extension matrix."""
    a = 9 - 42 * lam + 36 * lam**2
    b = 6 * (1 - 4 * lam + 3 * lam**2)
    c = 1.0
    d = 2 - 3 * lam
    den = 3 * (4 - 29 * lam + 60 * lam**2 - 36 * lam**3)
    gamma = 1.0 / den if den != 0 else math.inf
    return a, b, c, d, gamma


@lru_cache(maxsize=None)
def decimation_system(n: int) -> DecimationSystem:
    return DecimationSystem(VicsekParams(n))


class PreciseBranches:
    """Branch inverses of R at the working mpmath precision.

    A double-precision root leaves |R(x) - μ| near |R'(x)| times one ulp,
    which exceeds 1e-12 once n ≥ 5. Starting from the float branch and
    polishing with Newton steps on the exact coefficients removes that floor.
    """

    def __init__(self, sys: DecimationSystem):
        self.sys = sys
        coeffs = sys.exact_polys["R"]
        self.coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in reversed(coeffs)]
        self.dcoeffs = [c * (len(self.coeffs) - 1 - k) for k, c in enumerate(self.coeffs[:-1])]

    def R(self, x):
        return mpmath.polyval(self.coeffs, x)

    def branch(self, j: int, mu, guess: float | None = None):
        """φ_j(μ); ``guess`` is a float approximation of the root, computed here if omitted."""
        fmu = float(mu)
        if guess is None:
            guess = self.sys.branch(j, fmu, check=False) if (j != 1 or fmu > 1e-200) else 0.0
        x = mpmath.mpf(guess) if guess > 1e-200 or j != 1 else mu / self.sys.rho
        tol = mpmath.mpf(2) ** (-mpmath.mp.prec + 4)
        prev = mpmath.inf
        for _ in range(200):
            step = (self.R(x) - mu) / mpmath.polyval(self.dcoeffs, x)
            x -= step
            # cancellation in R leaves a noise floor; a step that no longer halves has reached it
            if abs(step) <= tol * abs(x) or abs(step) > prev / 2:
                break
            prev = abs(step)
        return x

    def psi(self, x):
        rho = self.sys.rho
        acc = x
        scale = mpmath.mpf(1)
        tol = mpmath.mpf(2) ** (-mpmath.mp.prec + 8)
        for _ in range(100_000):
            x = self.branch(1, x)
            scale *= rho
            new = scale * x
            if abs(new - acc) <= tol * abs(new):
                return new
            acc = new
        raise ArithmeticError("ψ iteration did not converge")


def _system(sys_or_n) -> DecimationSystem:
    return sys_or_n if isinstance(sys_or_n, DecimationSystem) else decimation_system(int(sys_or_n))


def eval_R(sys, lam):
    return _system(sys).eval_R(lam)


def forbidden_set(sys) -> list[float]:
    return _system(sys).forbidden_set()


def branch(sys, j: int, mu):
    return _system(sys).branch(j, mu)


def psi(sys, t):
    return _system(sys).psi(t)


def extension_matrix(sys, lam: float, allow_forbidden: bool = False) -> np.ndarray:
    return _system(sys).extension_matrix(lam, allow_forbidden)


def fixed_points(sys):
    return _system(sys).fixed_points()


# --------------------------------------------------------------------------
# spectrum records


def trim_word(word: Iterable[int]) -> tuple[int, ...]:
    w = list(word)
    while w and w[-1] == 1:
        w.pop()
    return tuple(w)


def word_admissible(series: Series, word: Sequence[int], n: int) -> bool:
    """Check the branch-choice rule on the first letters of a word."""
    if any(not 1 <= j <= 2 * n - 1 for j in word):
        return False
    if series == Series.ZERO:
        for j in word:
            if j != 1:
                return j % 2 == 1
        return True
    if not word:
        return True
    return word[0] % 2 == 1 and word[0] != 2 * n - 1


@dataclass(frozen=True, order=False)
class EigenvalueRecord:
    """One fractal eigenvalue with its symbolic address.

    For the 4/3-series the graph eigenvalue 4/3 appears at ``birth_level``
    and each letter of ``word`` picks the branch used at the following
    levels. The 0-series starts from the constant function at level 0.
    """

    series: Series
    birth_level: int
    word: tuple
    value: float
    multiplicity: int
    n: int = field(default=2)

    @property
    def key(self) -> tuple:
        return (self.series.value, self.birth_level, self.word)

    @property
    def settle_level(self) -> int:
        """First level at which the recorded graph eigenvalue is present."""
        return self.birth_level + len(self.word)

    @property
    def start(self) -> float:
        return 0.0 if self.series == Series.ZERO else FOUR_THIRDS


def fourthirds_multiplicity(n: int, birth: int) -> int:
    return 2 * (4 * n - 3) ** birth + 1


def make_record(sys, series: Series | str, birth_level: int, word: Sequence[int]) -> EigenvalueRecord:
    """Build a record, checking admissibility and computing its value."""
    sys = _system(sys)
    series = Series(series)
    word = tuple(int(j) for j in word)
    if not word_admissible(series, word, sys.n):
        raise ValueError(f"inadmissible word {word} for the {series.value} series")
    word = trim_word(word)
    if series == Series.ZERO:
        birth_level = 0
        mult = 1
    else:
        mult = fourthirds_multiplicity(sys.n, birth_level)
    x = sys.apply_word(word, 0.0 if series == Series.ZERO else FOUR_THIRDS)
    value = float(sys.rho) ** (birth_level + len(word)) * sys.psi(x)
    return EigenvalueRecord(series, birth_level, word, value, mult, sys.n)


def graph_eigenvalue_sequence(rec: EigenvalueRecord, M: int) -> list[float]:
    """Graph eigenvalues λ_0..λ_M of the record.

    Levels below the birth level of a 4/3-series record carry NaN, since
    the eigenvalue does not exist there.
    """
    sys = decimation_system(rec.n)
    if M < rec.settle_level:
        raise ValueError(f"level {M} is below the settle level {rec.settle_level}")
    out = [math.nan] * rec.birth_level
    x = rec.start
    out.append(x)
    letters = list(rec.word) + [1] * (M - rec.settle_level)
    for j in letters:
        x = sys.branch(j, x)
        out.append(x)
    return out


@dataclass
class SpectrumTable:
    """Records sorted by value, with running multiplicity counts."""

    n: int
    depth: int
    records: list

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([r.multiplicity for r in self.records], dtype=np.int64)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.multiplicities)

    @property
    def total_multiplicity(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def upper_value(self) -> float:
        """Every eigenvalue up to this value is present in the table."""
        return self.records[-1].value

    def segments(self) -> list[list]:
        """Split after each 4/3-series record born at level ≥ 1."""
        out, cur = [], []
        for r in self.records:
            cur.append(r)
            if r.series == Series.FOUR_THIRDS and r.birth_level >= 1:
                out.append(cur)
                cur = []
        if cur:
            out.append(cur)
        return out

    def alternates(self) -> bool:
        s = [r.series for r in self.records]
        return all(a != b for a, b in zip(s, s[1:]))


def _graph_levels(sys: DecimationSystem, depth: int, budget: int):
    """Recursive construction of the sorted level-k graph spectrum.

    Each entry is (graph value at level k, series, birth, untrimmed word).
    The images of the branches occupy consecutive disjoint intervals, so
    concatenating the branch images in branch order (reversing the
    decreasing ones) keeps the list sorted without a sort.
    """
    n = sys.n
    items = [(0.0, Series.ZERO, 0, ()), (FOUR_THIRDS, Series.FOUR_THIRDS, 0, ())]
    for k in range(1, depth + 1):
        vals = np.array([it[0] for it in items])
        new = []
        for j in range(1, 2 * n):
            keep = [
                i
                for i, (_, s, _, w) in enumerate(items)
                if word_admissible(s, w + (j,), n)
            ]
            if not keep:
                continue
            imgs = sys.branch(j, vals[keep], check=False)
            block = [(float(x), items[i][1], items[i][2], items[i][3] + (j,)) for x, i in zip(imgs, keep)]
            new.extend(block if j % 2 == 1 else block[::-1])
        new.append((FOUR_THIRDS, Series.FOUR_THIRDS, k, ()))
        if len(new) > budget:
            raise BudgetError(f"spectrum enumeration exceeds {budget} records")
        items = new
    return items


def enumerate_spectrum(sys, depth: int, budget: int = DEFAULT_RECORD_BUDGET) -> SpectrumTable:
    """All fractal eigenvalues up to ρ^depth ψ_n(4/3), in ascending order."""
    sys = _system(sys)
    if depth < 0:
        raise ValueError("depth must be ≥ 0")
    items = _graph_levels(sys, depth, budget)
    vals = np.array([it[0] for it in items])
    if np.any(np.diff(vals) < 0):
        raise ArithmeticError("branch concatenation produced an unsorted list")
    fractal = float(sys.rho) ** depth * sys.psi(vals)
    records = []
    for (x, s, b, w), val in zip(items, fractal):
        mult = 1 if s == Series.ZERO else fourthirds_multiplicity(sys.n, b)
        records.append(EigenvalueRecord(s, b, trim_word(w), float(val), mult, sys.n))
    return SpectrumTable(sys.n, depth, records)


def brute_enumerate(sys, depth: int, budget: int = 200_000) -> SpectrumTable:
    """Direct enumeration of all admissible words of bounded length."""
    sys = _system(sys)
    n = sys.n
    letters = range(1, 2 * n)
    count = sum((2 * n - 1) ** L for L in range(depth + 1)) * (depth + 2)
    if count > budget:
        raise BudgetError(f"brute enumeration of {count} words exceeds budget {budget}")
    seen = {}
    for series in (Series.ZERO, Series.FOUR_THIRDS):
        births = [0] if series == Series.ZERO else range(depth + 1)
        for b in births:
            for L in range(depth - b + 1):
                for w in itertools.product(letters, repeat=L):
                    if not word_admissible(series, w, n):
                        continue
                    key = (series, b, trim_word(w))
                    if key not in seen:
                        seen[key] = make_record(sys, series, b, w)
    records = sorted(seen.values(), key=lambda r: r.value)
    return SpectrumTable(n, depth, records)


def spectrum_at_level(sys, m: int) -> list[tuple[float, int]]:
    """Graph spectrum of Γ_m from decimation, as (value, multiplicity) pairs."""
    sys = _system(sys)
    items = _graph_levels(sys, m, DEFAULT_RECORD_BUDGET)
    out = []
    for x, s, b, _ in items:
        mult = 1 if s == Series.ZERO else fourthirds_multiplicity(sys.n, b)
        out.append((x, mult))
    return out
