"""
Exact rational LP and homogeneous polyhedral cones.

Handles:
  - General LP          → sympy.solvers.simplex (free variables, Fraction in and out)
  - Cone queries        → pplpy C_Polyhedron: dimension, containment, rays,
                          optimisation over the cone cut by the box [-1, 1]^dim
  - Rational rows       → scaled to primitive integer rows before reaching PPL

Usage:
    from troptrack.modules.polyhedra import solve_lp, PolyCone

    res = solve_lp(c, A_ub=rows, b_ub=rhs, maximize=True)
    cone = PolyCone(dim=6, inequalities=rows)
    point = cone.strict_interior_point()
"""
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import ppl
import sympy
from sympy.solvers.simplex import InfeasibleLPError, UnboundedLPError, lpmax, lpmin

from troptrack.errors import LPError
from troptrack.utils.linalg import Row, dot, matmul

logger = logging.getLogger(__name__)

ZERO = Fraction(0)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPResult:
    status: str
    value: Optional[Fraction] = None
    x: Optional[Tuple[Fraction, ...]] = None

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


# ── General LP ───────────────────────────────────────────────────────────────


def _rational(v) -> sympy.Rational:
    f = Fraction(v)
    return sympy.Rational(f.numerator, f.denominator)


def _fraction(v) -> Fraction:
    v = sympy.Rational(v)
    return Fraction(int(v.p), int(v.q))


def solve_lp(c: Sequence, A_ub: Sequence[Sequence] = (), b_ub: Sequence = (),
             A_eq: Sequence[Sequence] = (), b_eq: Sequence = (),
             maximize: bool = False) -> LPResult:
    """Optimize c·x over {A_ub x <= b_ub, A_eq x = b_eq} with x free."""
    n = len(c)
    xs = sympy.symbols(f"x0:{n}")
    objective = sympy.Add(*(_rational(v) * x for v, x in zip(c, xs)))

    constraints = []
    rows = [(r, b, False) for r, b in zip(A_ub, b_ub)] + [(r, b, True) for r, b in zip(A_eq, b_eq)]
    for row, rhs, is_eq in rows:
        lhs = sympy.Add(*(_rational(v) * x for v, x in zip(row, xs)))
        rhs = _rational(rhs)
        if not lhs.free_symbols:
            if (lhs != rhs) if is_eq else (lhs > rhs):
                return LPResult(INFEASIBLE)
            continue
        constraints.append(sympy.Eq(lhs, rhs) if is_eq else lhs <= rhs)

    if not constraints:
        if objective == 0:
            return LPResult(OPTIMAL, ZERO, (ZERO,) * n)
        return LPResult(UNBOUNDED)

    try:
        value, point = (lpmax if maximize else lpmin)(objective, constraints)
    except InfeasibleLPError:
        return LPResult(INFEASIBLE)
    except UnboundedLPError:
        return LPResult(UNBOUNDED)
    except TypeError as e:
        raise LPError(f"LP could not be decided exactly: {e}", {"variables": n}) from e
    x = tuple(_fraction(point.get(s, 0)) for s in xs)
    logger.debug(f"[LP] {'max' if maximize else 'min'} over {len(constraints)} constraints = {value}")
    return LPResult(OPTIMAL, _fraction(value), x)


# ── PPL bridge ───────────────────────────────────────────────────────────────


def _integer_row(row: Sequence[Fraction]) -> List[int]:
    den = math.lcm(*(Fraction(v).denominator for v in row)) if row else 1
    ints = [int(Fraction(v) * den) for v in row]
    g = math.gcd(*ints) if any(ints) else 1
    return [v // g for v in ints]


def _expr(row: Sequence[Fraction], constant: int = 0) -> ppl.Linear_Expression:
    return ppl.Linear_Expression(_integer_row(row), constant)


def _unit(n: int, j: int, sign: int = 1) -> List[int]:
    u = [0] * n
    u[j] = sign
    return u


@lru_cache(maxsize=4096)
def _polyhedron(dim: int, equalities: Tuple[Row, ...], inequalities: Tuple[Row, ...],
                boxed: bool = False) -> ppl.C_Polyhedron:
    poly = ppl.C_Polyhedron(dim, "universe")
    for e in equalities:
        if any(e):
            poly.add_constraint(_expr(e) == 0)
    for f in inequalities:
        if any(f):
            poly.add_constraint(_expr(f) >= 0)
    if boxed:
        for j in range(dim):
            poly.add_constraint(ppl.Linear_Expression(_unit(dim, j, -1), 1) >= 0)
            poly.add_constraint(ppl.Linear_Expression(_unit(dim, j), 1) >= 0)
    return poly


def _point_of(generator, n: int) -> Tuple[Fraction, ...]:
    d = int(generator.divisor())
    return tuple(Fraction(int(c), d) for c in generator.coefficients()[:n])


def _supremum(poly: ppl.C_Polyhedron, objective: Sequence[Fraction]) -> dict:
    """PPL maximize of a rational objective; the value comes back as a Fraction."""
    obj = [Fraction(v) for v in objective]
    den = math.lcm(*(v.denominator for v in obj)) if obj else 1
    res = poly.maximize(ppl.Linear_Expression([int(v * den) for v in obj], 0))
    if not res.get("bounded"):
        raise LPError("cone LP is unbounded or empty", {"dim": poly.space_dimension()})
    res["value"] = Fraction(int(res["sup_n"]), int(res["sup_d"])) / den
    return res


def _strict_point(dim: int, equalities: Sequence[Row], inequalities: Sequence[Row],
                  strict: Sequence[Row]) -> Optional[Tuple[Fraction, ...]]:
    """Maximize s with f·x >= s on the strict rows, s <= 1, x in the box; None if s* <= 0."""
    n = dim + 1
    lift = lambda r: tuple(Fraction(v) for v in r) + (ZERO,)
    eqs = tuple(lift(e) for e in equalities)
    ineqs = [lift(f) for f in inequalities]
    ineqs += [tuple(Fraction(v) for v in f) + (Fraction(-1),) for f in strict]
    poly = _polyhedron(n, eqs, tuple(ineqs), boxed=True)
    if poly.is_empty():
        return None
    res = _supremum(poly, (ZERO,) * dim + (Fraction(1),))
    if res["value"] <= 0:
        return None
    return _point_of(res["generator"], dim)


# ── Cones ────────────────────────────────────────────────────────────────────


def _as_rows(rows) -> Tuple[Row, ...]:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


@dataclass(frozen=True)
class PolyCone:
    """Homogeneous cone {x : E x = 0, F x >= 0} in Q^dim."""
    dim: int
    equalities: Tuple[Row, ...] = field(default=())
    inequalities: Tuple[Row, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "equalities", _as_rows(self.equalities))
        object.__setattr__(self, "inequalities", _as_rows(self.inequalities))

    def polyhedron(self, boxed: bool = False) -> ppl.C_Polyhedron:
        return _polyhedron(self.dim, self.equalities, self.inequalities, boxed)

    def contains(self, x: Sequence[Fraction]) -> bool:
        return (all(dot(e, x) == 0 for e in self.equalities)
                and all(dot(f, x) >= 0 for f in self.inequalities))

    def contains_strictly(self, x: Sequence[Fraction]) -> bool:
        return (all(dot(e, x) == 0 for e in self.equalities)
                and all(dot(f, x) > 0 for f in self.inequalities))

    def intersect(self, other: "PolyCone") -> "PolyCone":
        if other.dim != self.dim:
            raise ValueError("cones live in different spaces")
        return PolyCone(self.dim, self.equalities + other.equalities,
                        self.inequalities + other.inequalities)

    def preimage(self, matrix: Sequence[Sequence[Fraction]]) -> "PolyCone":
        """{y : M y in self} for a dim x m matrix M."""
        m = len(matrix[0]) if matrix else 0
        return PolyCone(m, matmul(self.equalities, matrix) if self.equalities else (),
                        matmul(self.inequalities, matrix) if self.inequalities else ())

    def strict_interior_point(self, extra_strict: Sequence[Sequence[Fraction]] = ()) -> Optional[Tuple[Fraction, ...]]:
        """Point with every inequality (and every extra row) strictly positive, or None."""
        strict = list(self.inequalities) + list(_as_rows(extra_strict))
        return _strict_point(self.dim, self.equalities, (), strict)

    def is_full_dimensional(self) -> bool:
        return self.dimension() == self.dim

    def dimension(self) -> int:
        return int(self.polyhedron().affine_dimension())

    def minimize(self, objective: Sequence[Fraction]) -> Fraction:
        """min objective·x over the cone intersected with the box [-1, 1]^dim."""
        return -self.maximize([-Fraction(v) for v in objective])

    def maximize(self, objective: Sequence[Fraction]) -> Fraction:
        return _supremum(self.polyhedron(boxed=True), objective)["value"]

    def contained_in(self, other: "PolyCone", matrix: Sequence[Sequence[Fraction]] | None = None) -> bool:
        """True when M(self) is a subset of other (M defaults to the identity)."""
        target = other if matrix is None else other.preimage(matrix)
        if target.dim != self.dim:
            raise ValueError("dimension mismatch in containment test")
        return bool(target.polyhedron().contains(self.polyhedron()))

    def equals(self, other: "PolyCone") -> bool:
        return self.contained_in(other) and other.contained_in(self)

    def meets_interior_of(self, other: "PolyCone") -> bool:
        """self ∩ int(other) is nonempty (other's inequalities strict)."""
        if other.dim != self.dim:
            raise ValueError("cones live in different spaces")
        return _strict_point(self.dim, self.equalities + other.equalities,
                             self.inequalities, other.inequalities) is not None

    def extreme_rays(self) -> List[Tuple[Fraction, ...]]:
        """Generators of the cone as primitive integer vectors; a lineality line gives both signs."""
        rays = set()
        for gen in self.polyhedron().minimized_generators():
            if gen.is_ray() or gen.is_line():
                v = tuple(Fraction(int(c)) for c in gen.coefficients())
                rays.add(v)
                if gen.is_line():
                    rays.add(tuple(-x for x in v))
        return sorted(rays)

    def random_point(self, rng: random.Random, tries: int = 200, scale: int = 20) -> Optional[Tuple[Fraction, ...]]:
        """Rejection-sample an integer point of the cone, falling back to an interior point."""
        if not self.equalities:
            for _ in range(tries):
                x = tuple(Fraction(rng.randint(-scale, scale)) for _ in range(self.dim))
                if any(x) and self.contains(x):
                    return x
        return self.strict_interior_point()
