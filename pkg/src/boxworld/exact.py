"""Exact linear algebra and LP feasibility over the rationals.

Everything here works on Python integers internally: rational input rows
are cleared of denominators, eliminated fraction-free, and divided by their
content (gcd) after each update so coefficients stay small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

Vector = list[Fraction]


def _integer_row(row: Sequence) -> list[int]:
    """Scale a rational row by a positive factor so all entries are integers."""
    fr = [Fraction(v) for v in row]
    den = math.lcm(*(v.denominator for v in fr)) if fr else 1
    return [v.numerator * (den // v.denominator) for v in fr]


def _primitive(row: list[int]) -> list[int]:
    g = math.gcd(*row)
    if g > 1:
        return [v // g for v in row]
    return row


@dataclass(frozen=True)
class LinearSystem:
    """Equality constraints ``A q = b`` with rational coefficients."""

    matrix: tuple[tuple[Fraction, ...], ...]
    rhs: tuple[Fraction, ...]
    n_cols: int

    @classmethod
    def of(cls, matrix: Sequence[Sequence], rhs: Sequence | None = None,
           n_cols: int | None = None) -> "LinearSystem":
        mat = tuple(tuple(Fraction(v) for v in row) for row in matrix)
        if n_cols is None:
            if not mat:
                raise ValueError("n_cols is required for an empty matrix")
            n_cols = len(mat[0])
        if any(len(row) != n_cols for row in mat):
            raise ValueError("ragged matrix")
        if rhs is None:
            rhs = (Fraction(0),) * len(mat)
        rhs = tuple(Fraction(v) for v in rhs)
        if len(rhs) != len(mat):
            raise ValueError(f"{len(mat)} rows but {len(rhs)} right-hand sides")
        return cls(mat, rhs, n_cols)


def row_echelon(matrix: Sequence[Sequence], n_cols: int) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form, fraction-free.

    Returns integer rows (each a positive multiple of the true RREF row) and
    the pivot column of each row.
    """
    rows = [_primitive(_integer_row(r)) for r in matrix if any(r)]
    pivots: list[int] = []
    r = 0
    for col in range(n_cols):
        pr = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        piv_row = rows[r]
        if piv_row[col] < 0:
            piv_row = rows[r] = [-v for v in piv_row]
        p = piv_row[col]
        for i in range(len(rows)):
            if i != r and rows[i][col]:
                f = rows[i][col]
                rows[i] = _primitive([p * u - f * v for u, v in zip(rows[i], piv_row)])
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    rows = rows[:r]
    return rows, pivots


def rank(matrix: Sequence[Sequence], n_cols: int) -> int:
    return len(row_echelon(matrix, n_cols)[1])


def kernel_basis(system: LinearSystem | Sequence[Sequence], n_cols: int | None = None) -> list[Vector]:
    """Exact basis of ``{v : A v = 0}`` (the right-hand side is ignored).

    One vector per free column, with a 1 in that column.
    """
    if not isinstance(system, LinearSystem):
        system = LinearSystem.of(system, n_cols=n_cols)
    rows, pivots = row_echelon(system.matrix, system.n_cols)
    pivot_set = set(pivots)
    basis = []
    for free in range(system.n_cols):
        if free in pivot_set:
            continue
        v = [Fraction(0)] * system.n_cols
        v[free] = Fraction(1)
        for row, pc in zip(rows, pivots):
            if row[free]:
                v[pc] = Fraction(-row[free], row[pc])
        basis.append(v)
    return basis


def solve_unique(matrix: Sequence[Sequence], rhs: Sequence) -> Vector | None:
    """The unique solution of a square-or-tall system, or None."""
    n = len(matrix[0]) if matrix else 0
    aug = [list(row) + [b] for row, b in zip(matrix, rhs)]
    rows, pivots = row_echelon(aug, n + 1)
    if n in pivots or len(pivots) < n:
        return None
    return [Fraction(row[n], row[pc]) for row, pc in zip(rows, pivots)]


# --- LP feasibility -------------------------------------------------------

@dataclass
class FeasibilityResult:
    """Outcome of :func:`feasible`.

    When feasible, ``solution`` satisfies the constraints exactly. Otherwise
    ``witness`` is a Farkas vector ``y`` with ``y . A_j >= 0`` for every
    column ``j`` and ``y . b < 0`` (over the possibly augmented system).
    """

    feasible: bool
    solution: Vector | None = None
    witness: Vector | None = None
    iterations: int = 0
    rows: list[list[Fraction]] = field(default_factory=list, repr=False)
    rhs: list[Fraction] = field(default_factory=list, repr=False)


def feasible(matrix: Sequence[Sequence], rhs: Sequence, *, convex: bool = False,
             n_cols: int | None = None, max_iterations: int = 100_000) -> FeasibilityResult:
    """Decide whether ``A q = b, q >= 0`` (and ``sum(q) = 1`` if ``convex``) has a solution.

    Phase-one simplex with Bland's rule on an integer tableau. The returned
    solution or witness is re-verified with exact arithmetic before return.
    """
    A = [[Fraction(v) for v in row] for row in matrix]
    b = [Fraction(v) for v in rhs]
    if len(A) != len(b):
        raise ValueError(f"{len(A)} rows but {len(b)} right-hand sides")
    if n_cols is None:
        n_cols = len(A[0]) if A else 0
    if any(len(row) != n_cols for row in A):
        raise ValueError("ragged matrix")
    if convex:
        A.append([Fraction(1)] * n_cols)
        b.append(Fraction(1))
    m, n = len(A), n_cols

    # scaled, sign-fixed integer rows: row_i = sign_i * scale_i * (A_i | b_i)
    sign = [1] * m
    scale = [1] * m
    tab: list[list[int]] = []
    for i in range(m):
        full = A[i] + [b[i]]
        den = math.lcm(*(v.denominator for v in full))
        s = -1 if b[i] < 0 else 1
        sign[i], scale[i] = s, den
        ints = [s * v.numerator * (den // v.denominator) for v in full]
        art = [0] * m
        art[i] = 1
        tab.append(ints[:n] + art + [ints[n]])
    width = n + m + 1
    basis = [n + i for i in range(m)]

    # objective row (minimise the sum of artificials), scaled by sigma
    obj = [0] * width
    for j in range(n):
        obj[j] = -sum(tab[i][j] for i in range(m))
    obj[width - 1] = -sum(tab[i][width - 1] for i in range(m))
    sigma = Fraction(1)

    iterations = 0
    while True:
        enter = next((j for j in range(n + m) if obj[j] < 0), None)
        if enter is None:
            break
        if iterations >= max_iterations:
            raise RuntimeError("simplex iteration limit reached")
        leave = None
        for i in range(m):
            aij = tab[i][enter]
            if aij <= 0:
                continue
            if leave is None:
                leave = i
                continue
            # compare rhs_i / a_ij with rhs_l / a_lj
            lj = tab[leave][enter]
            lhs = tab[i][width - 1] * lj
            rhs_ = tab[leave][width - 1] * aij
            if lhs < rhs_ or (lhs == rhs_ and basis[i] < basis[leave]):
                leave = i
        if leave is None:
            # cannot happen in phase one: the objective is bounded below by 0
            raise RuntimeError("phase-one objective unbounded")
        prow = tab[leave]
        p = prow[enter]
        for i in range(m):
            if i != leave and tab[i][enter]:
                f = tab[i][enter]
                tab[i] = _primitive([p * u - f * v for u, v in zip(tab[i], prow)])
        f = obj[enter]
        obj = [p * u - f * v for u, v in zip(obj, prow)]
        sigma *= p
        g = math.gcd(*obj)
        if g > 1:
            obj = [v // g for v in obj]
            sigma /= g
        basis[leave] = enter
        iterations += 1

    objective = -Fraction(obj[width - 1]) / sigma
    result = FeasibilityResult(False, iterations=iterations, rows=A, rhs=b)
    if objective == 0:
        q = [Fraction(0)] * n
        for i, j in enumerate(basis):
            if j < n:
                q[j] = Fraction(tab[i][width - 1], tab[i][j])
        if not verify_solution(A, b, q):
            raise RuntimeError("internal error: simplex solution failed verification")
        result.feasible = True
        result.solution = q
        return result

    # duals u_i = 1 - reduced cost of artificial i; witness y = -sign*scale*u
    u = [1 - Fraction(obj[n + i]) / sigma for i in range(m)]
    y = [-sign[i] * scale[i] * u[i] for i in range(m)]
    if not verify_witness(A, b, y):
        raise RuntimeError("internal error: Farkas witness failed verification")
    result.witness = y
    return result


def verify_solution(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction], q: Sequence[Fraction]) -> bool:
    if any(v < 0 for v in q):
        return False
    return all(sum((a * v for a, v in zip(row, q) if a and v), Fraction(0)) == bi
               for row, bi in zip(A, b))


def verify_witness(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction], y: Sequence[Fraction]) -> bool:
    n = len(A[0]) if A else 0
    for j in range(n):
        if sum((yi * row[j] for yi, row in zip(y, A) if yi and row[j]), Fraction(0)) < 0:
            return False
    return sum((yi * bi for yi, bi in zip(y, b)), Fraction(0)) < 0


# --- extreme rays of a pointed cone (double description) ------------------

def extreme_rays(constraints: Sequence[Sequence], dim: int) -> list[list[int]]:
    """Extreme rays of the pointed cone ``{y : c . y >= 0 for every c}``.

    Double description with the combinatorial adjacency test. Rays come back
    as primitive integer vectors. The constraint matrix must have full
    column rank ``dim`` (otherwise the cone is not pointed).
    """
    cons = [_primitive(_integer_row(c)) for c in constraints]
    cons = [c for c in cons if any(c)]
    if any(len(c) != dim for c in cons):
        raise ValueError("constraint width does not match dim")

    # initial simplicial cone from dim independent constraints
    chosen: list[int] = []
    for i in range(len(cons)):
        if rank([cons[k] for k in chosen + [i]], dim) == len(chosen) + 1:
            chosen.append(i)
            if len(chosen) == dim:
                break
    if len(chosen) < dim:
        raise ValueError("constraints do not have full rank: cone is not pointed")

    # rays of {B y >= 0} are the columns of B^{-1}
    B = [cons[i] for i in chosen]
    rays: list[list[int]] = []
    for k in range(dim):
        e = [0] * dim
        e[k] = 1
        col = solve_unique(B, e)
        rays.append(_primitive(_integer_row(col)))
    # tight sets as bitmasks over constraint indices
    tight = []
    for r in rays:
        mask = 0
        for ci in chosen:
            if not _dot_int(cons[ci], r):
                mask |= 1 << ci
        tight.append(mask)

    processed = set(chosen)
    for ci in range(len(cons)):
        if ci in processed:
            continue
        c = cons[ci]
        vals = [_dot_int(c, r) for r in rays]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        zero = [k for k, v in enumerate(vals) if v == 0]
        bit = 1 << ci
        new_rays = [rays[k] for k in pos + zero]
        new_tight = [tight[k] for k in pos] + [tight[k] | bit for k in zero]
        for kp in pos:
            for kn in neg:
                common = tight[kp] & tight[kn]
                if bin(common).count("1") < dim - 2:
                    continue
                if any(k != kp and k != kn and (common & tight[k]) == common
                       for k in range(len(rays))):
                    continue
                vp, vn = vals[kp], vals[kn]
                ray = _primitive([vp * u - vn * w for u, w in zip(rays[kn], rays[kp])])
                new_rays.append(ray)
                new_tight.append(common | bit)
        rays, tight = new_rays, new_tight
        processed.add(ci)
    return rays


def _dot_int(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(u, v))
