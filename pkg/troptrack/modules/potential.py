"""
Tropicalized potential on the A-space: one min of corner forms per puncture.

For each puncture p, w_p(a) is the minimum over corners at p of the corner
form a_opposite - a_adjacent - a_adjacent. Corners whose forms coincide as
linear functions (both triangles of a once-punctured torus) are treated as
one term when deciding ties and domains.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from tqdm import tqdm

from troptrack.config import get_settings
from troptrack.errors import ChartMismatch
from troptrack.modules.polyhedra import PolyCone
from troptrack.modules.surface import ArcId, Corner, LabeledTriangulation, exchange_matrix, flip
from troptrack.modules.tropical import TropicalPoint, tropical_a_mutate
from troptrack.utils.linalg import dot

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CornerForm:
    triangle: str
    corner: int
    puncture: str
    coeffs: Tuple[Fraction, ...]

    @property
    def key(self) -> Corner:
        return (self.triangle, self.corner)

    def evaluate(self, a: Sequence[Fraction]) -> Fraction:
        return dot(self.coeffs, a)


@dataclass(frozen=True)
class PotentialValue:
    values: Dict[str, Fraction]
    argmins: Dict[str, Tuple[Corner, ...]]


@dataclass(frozen=True)
class DomainDescriptor:
    """Choice p -> corner on interior points; boundary=True when distinct forms tie."""
    choice: Dict[str, Optional[Corner]]
    boundary: bool
    argmins: Dict[str, Tuple[Corner, ...]]


@dataclass(frozen=True)
class LinearityDomain:
    choice: Tuple[Tuple[str, Corner], ...]
    cone: PolyCone
    interior_point: Tuple[Fraction, ...]

    @property
    def choice_map(self) -> Dict[str, Corner]:
        return dict(self.choice)

    @property
    def key(self) -> frozenset:
        return facet_key(self.cone)


# ── Corner forms ─────────────────────────────────────────────────────────────


def corner_forms(tri: LabeledTriangulation) -> List[CornerForm]:
    idx = tri.arc_index
    n = len(tri.arcs)
    forms = []
    for t, sides in tri.triangles:
        for i in range(3):
            coeffs = [Fraction(0)] * n
            coeffs[idx[sides[(i + 2) % 3]]] += 1
            coeffs[idx[sides[i]]] -= 1
            coeffs[idx[sides[(i + 1) % 3]]] -= 1
            forms.append(CornerForm(t, i, tri.corner(t, i), tuple(coeffs)))
    return forms


def forms_by_puncture(tri: LabeledTriangulation) -> Dict[str, List[CornerForm]]:
    out: Dict[str, List[CornerForm]] = {p: [] for p in tri.surface.punctures}
    for f in corner_forms(tri):
        out[f.puncture].append(f)
    return out


def corner_form(tri: LabeledTriangulation, corner: Corner) -> CornerForm:
    t, i = corner
    return next(f for f in corner_forms(tri) if f.key == (t, i % 3))


def format_form(tri: LabeledTriangulation, coeffs: Sequence[Fraction], prefix: str = "a") -> str:
    parts = []
    for arc, c in zip(tri.arcs, coeffs):
        if c == 0:
            continue
        mag = "" if abs(c) == 1 else f"{abs(c)}*"
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {mag}{prefix}{tri.label(arc)}")
    text = " ".join(parts).lstrip("+ ").strip()
    return text if not text.startswith("- ") else "-" + text[2:]


def potential_terms(tri: LabeledTriangulation) -> Dict[str, List[Dict[ArcId, int]]]:
    """Distinct linear terms of each w_p, as {arc: coefficient} dicts."""
    out: Dict[str, List[Dict[ArcId, int]]] = {}
    for p, forms in forms_by_puncture(tri).items():
        seen = []
        for f in forms:
            term = {a: int(c) for a, c in zip(tri.arcs, f.coeffs) if c != 0}
            if term not in seen:
                seen.append(term)
        out[p] = seen
    return out


# ── Public API ───────────────────────────────────────────────────────────────


def _coords(tri: LabeledTriangulation, a) -> Tuple[Fraction, ...]:
    if isinstance(a, TropicalPoint):
        if a.kind != "A":
            raise ChartMismatch("the potential is defined on A-points")
        if tuple(map(str, a.arcs)) != tuple(map(str, tri.arcs)):
            raise ChartMismatch("point does not live on this triangulation's arcs")
        return a.values
    values = tuple(Fraction(v) for v in a)
    if len(values) != len(tri.arcs):
        raise ChartMismatch("coordinate count differs from the number of arcs")
    return values


def tropical_potential(tri: LabeledTriangulation, a) -> PotentialValue:
    x = _coords(tri, a)
    values: Dict[str, Fraction] = {}
    argmins: Dict[str, Tuple[Corner, ...]] = {}
    for p, forms in forms_by_puncture(tri).items():
        evaluated = [(f.evaluate(x), f.key) for f in forms]
        m = min(v for v, _ in evaluated)
        values[p] = m
        argmins[p] = tuple(key for v, key in evaluated if v == m)
    return PotentialValue(values, argmins)


def is_in_V(tri: LabeledTriangulation, a) -> bool:
    return all(v == 0 for v in tropical_potential(tri, a).values.values())


def linearity_domain(tri: LabeledTriangulation, a) -> DomainDescriptor:
    pv = tropical_potential(tri, a)
    by_p = forms_by_puncture(tri)
    choice: Dict[str, Optional[Corner]] = {}
    boundary = False
    for p, keys in pv.argmins.items():
        forms = {f.key: f.coeffs for f in by_p[p]}
        distinct = {forms[k] for k in keys}
        if len(distinct) == 1:
            choice[p] = keys[0]
        else:
            choice[p] = None
            boundary = True
    return DomainDescriptor(choice, boundary, pv.argmins)


def domain_cone(tri: LabeledTriangulation, choice: Mapping[str, Corner], restrict_to_V: bool = False) -> PolyCone:
    """Closed domain {w_c' >= w_{c_p} for every corner c' at p}, optionally on w = 0."""
    by_p = forms_by_puncture(tri)
    ineqs, eqs = [], []
    for p, chosen in choice.items():
        base = next(f for f in by_p[p] if f.key == tuple(chosen))
        for f in by_p[p]:
            if f.coeffs != base.coeffs:
                ineqs.append(tuple(x - y for x, y in zip(f.coeffs, base.coeffs)))
        if restrict_to_V:
            eqs.append(base.coeffs)
    return PolyCone(len(tri.arcs), tuple(eqs), tuple(_dedupe(ineqs)))


def enumerate_domains(tri: LabeledTriangulation, restrict_to_V: bool = False) -> List[LinearityDomain]:
    """All maximal linearity domains, each with an exact interior point.

    Backtracks puncture by puncture over representatives of distinct corner
    forms, pruning partial choices whose strict system is infeasible.
    """
    by_p = forms_by_puncture(tri)
    punctures = list(tri.surface.punctures)
    reps: Dict[str, List[CornerForm]] = {}
    for p in punctures:
        seen: Dict[Tuple, CornerForm] = {}
        for f in by_p[p]:
            seen.setdefault(f.coeffs, f)
        reps[p] = list(seen.values())

    found: Dict[frozenset, LinearityDomain] = {}
    settings = get_settings()
    bar = tqdm(total=len(reps[punctures[0]]), disable=not settings.progress, desc="domains", leave=False)

    def extend(depth: int, chosen: Dict[str, Corner]) -> None:
        if depth == len(punctures):
            cone = domain_cone(tri, chosen, restrict_to_V)
            point = cone.strict_interior_point()
            if point is not None:
                dom = LinearityDomain(tuple(sorted(chosen.items())), cone, point)
                found.setdefault(dom.key, dom)
            return
        p = punctures[depth]
        for f in reps[p]:
            chosen[p] = f.key
            if depth + 1 == len(punctures) or domain_cone(tri, chosen, restrict_to_V).strict_interior_point() is not None:
                extend(depth + 1, chosen)
            del chosen[p]
            if depth == 0:
                bar.update(1)

    extend(0, {})
    bar.close()
    domains = sorted(found.values(), key=lambda d: [(p, c) for p, c in d.choice])
    logger.info(f"[Potential] {len(domains)} linearity domains on {tri.chart_id}"
                f"{' (w=0)' if restrict_to_V else ''}")
    return domains


def find_V_point(tri: LabeledTriangulation, choice: Mapping[str, Corner] | None = None) -> Optional[Tuple[Fraction, ...]]:
    """Nonzero a with w(a) = 0, relatively interior to a domain."""
    if choice is not None:
        return domain_cone(tri, choice, restrict_to_V=True).strict_interior_point()
    for dom in enumerate_domains(tri, restrict_to_V=True):
        if any(dom.interior_point):
            return dom.interior_point
    return None


def potential_chart_invariance(tri: LabeledTriangulation, k: ArcId, a) -> bool:
    x = _coords(tri, a)
    point = TropicalPoint(tri.chart_id, "A", tri.arcs, x)
    flipped = flip(tri, k)
    moved = tropical_a_mutate(point, exchange_matrix(tri), k)
    return tropical_potential(tri, x).values == tropical_potential(flipped, moved.values).values


# ── Internal helpers ─────────────────────────────────────────────────────────


def _normalize(row: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    pivot = next((abs(x) for x in row if x != 0), Fraction(1))
    return tuple(x / pivot for x in row)


def _dedupe(rows: List[Tuple[Fraction, ...]]) -> List[Tuple[Fraction, ...]]:
    out, seen = [], set()
    for r in rows:
        key = _normalize(r)
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out


def facet_key(cone: PolyCone) -> frozenset:
    return frozenset(_normalize(r) for r in cone.inequalities) | frozenset(
        ("eq",) + _normalize(r) for r in cone.equalities)
