"""
Exact linear algebra over the rationals (sympy) plus Fraction conversions.

Usage:
    from troptrack.utils.linalg import rational_rank, nullspace_basis, inverse

Matrices are passed around as tuples of tuples of Fraction; sympy is used
for the heavy lifting and results are converted back.
"""
import logging
from fractions import Fraction
from typing import List, Sequence, Tuple

import sympy

logger = logging.getLogger(__name__)

Row = Tuple[Fraction, ...]
Mat = Tuple[Row, ...]


# ── Conversions ─────────────────────────────────────────────────────────────


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, str):
        return Fraction(value)
    rational = sympy.nsimplify(value, rational=True)
    return Fraction(int(rational.p), int(rational.q))


def to_sympy(rows: Sequence[Sequence], ncols: int | None = None) -> sympy.Matrix:
    if not rows:
        return sympy.zeros(0, ncols or 0)
    return sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) if isinstance(x, Fraction) else x
                          for x in row] for row in rows])


def from_sympy(matrix: sympy.Matrix) -> Mat:
    return tuple(tuple(to_fraction(matrix[i, j]) for j in range(matrix.cols)) for i in range(matrix.rows))


# ── Dense helpers ───────────────────────────────────────────────────────────


def identity(n: int) -> Mat:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> Mat:
    if not a:
        return ()
    inner = len(b)
    cols = len(b[0]) if b else 0
    return tuple(
        tuple(sum((a[i][t] * b[t][j] for t in range(inner)), Fraction(0)) for j in range(cols))
        for i in range(len(a))
    )


def matvec(a: Sequence[Sequence[Fraction]], v: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    return tuple(sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in a)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(u, v)), Fraction(0))


def transpose(a: Sequence[Sequence[Fraction]]) -> Mat:
    return tuple(zip(*a)) if a else ()


# ── Rank, kernels, inverses ─────────────────────────────────────────────────


def rational_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows:
        return 0
    return to_sympy(rows).rank()


def nullspace_basis(rows: Sequence[Sequence[Fraction]], ncols: int) -> List[Row]:
    """Basis of {v : rows · v = 0}, with integer-cleared vectors."""
    if not rows:
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    basis = to_sympy(rows).nullspace()
    out = []
    for vec in basis:
        denominators = [sympy.fraction(x)[1] for x in vec]
        scale = sympy.ilcm(*denominators) if denominators else 1
        out.append(tuple(to_fraction(x * scale) for x in vec))
    return out


def greedy_independent_rows(rows: Sequence[Sequence[Fraction]]) -> List[int]:
    """Indices of a maximal independent subset, scanning rows in order."""
    chosen: List[int] = []
    current: List[Sequence[Fraction]] = []
    rank = 0
    for idx, row in enumerate(rows):
        trial = current + [row]
        r = rational_rank(trial)
        if r > rank:
            chosen.append(idx)
            current = trial
            rank = r
    return chosen


def inverse(rows: Sequence[Sequence[Fraction]]) -> Mat:
    m = to_sympy(rows)
    if m.rows != m.cols or m.det() == 0:
        raise ValueError("matrix is not invertible")
    return from_sympy(m.inv())


def solve_left(basis_cols: Sequence[Sequence[Fraction]], target: Sequence[Sequence[Fraction]]) -> Mat:
    """Solve K · R = T for R where K has full column rank (exact least squares)."""
    k = to_sympy(basis_cols)
    t = to_sympy(target)
    r = (k.T * k).inv() * k.T * t
    if k * r != t:
        raise ValueError("target columns are not in the span of the basis")
    return from_sympy(r)
