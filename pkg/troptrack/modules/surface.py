"""
Punctured surfaces, labeled ideal triangulations, flips and exchange matrices.

Conventions
  - A triangle is a counterclockwise triple of arc ids (s0, s1, s2).
  - Side i runs from corner i-1 to corner i; corner i is the puncture at the
    end of side i, i.e. between sides i and i+1.
  - Two sides glued along an arc are traversed in opposite directions, so
    the end of one side is the start of the other.
  - b_ij counts corners where arc j follows arc i counterclockwise minus
    corners where i follows j.

Usage:
    from troptrack.modules.surface import build_triangulation, flip, exchange_matrix

    tri = build_triangulation({"surface": {...}, "triangulation": {...}})
    tri2 = flip(tri, 1)
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from troptrack.errors import (
    ArcCountMismatch,
    FlipBlocked,
    GluingInvalid,
    SelfFolded,
    SurfaceExcluded,
)

logger = logging.getLogger(__name__)

ArcId = Hashable
TriId = str
Side = Tuple[TriId, int]
Corner = Tuple[TriId, int]


# ── Surfaces ─────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class PuncturedSurface:
    genus: int
    punctures: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "punctures", tuple(str(p) for p in self.punctures))
        g, h = self.genus, len(self.punctures)
        if g < 0 or h < 1:
            raise SurfaceExcluded(f"genus {g} with {h} punctures is not a punctured surface",
                                  {"genus": g, "punctures": h})
        if len(set(self.punctures)) != h:
            raise SurfaceExcluded("puncture ids must be distinct", {"punctures": list(self.punctures)})
        if 2 * g - 2 + h <= 0:
            raise SurfaceExcluded(f"2g-2+h = {2 * g - 2 + h} must be positive", {"genus": g, "punctures": h})
        if g == 0 and h <= 3:
            raise SurfaceExcluded(f"a sphere needs more than 3 punctures, got {h}", {"genus": g, "punctures": h})

    @property
    def h(self) -> int:
        return len(self.punctures)

    @property
    def euler_characteristic(self) -> int:
        return 2 - 2 * self.genus - self.h

    @property
    def arc_count(self) -> int:
        return 6 * self.genus - 6 + 3 * self.h

    @property
    def measure_dimension(self) -> int:
        """Dimension of the measure cone of a complete train track."""
        return 6 * self.genus - 6 + 2 * self.h


# ── Triangulations ───────────────────────────────────────────────────────────


@dataclass(frozen=True)
class LabeledTriangulation:
    surface: PuncturedSurface
    arcs: Tuple[ArcId, ...]
    triangles: Tuple[Tuple[TriId, Tuple[ArcId, ArcId, ArcId]], ...]
    corners: Tuple[Tuple[TriId, Tuple[str, str, str]], ...]
    labels: Tuple[Tuple[ArcId, str], ...] = field(default=())

    # -- lookups ------------------------------------------------------------

    @cached_property
    def triangle_map(self) -> Dict[TriId, Tuple[ArcId, ArcId, ArcId]]:
        return dict(self.triangles)

    @cached_property
    def corner_map(self) -> Dict[TriId, Tuple[str, str, str]]:
        return dict(self.corners)

    @property
    def triangle_ids(self) -> Tuple[TriId, ...]:
        return tuple(t for t, _ in self.triangles)

    @cached_property
    def arc_index(self) -> Dict[ArcId, int]:
        return {a: i for i, a in enumerate(self.arcs)}

    @cached_property
    def side_map(self) -> Dict[ArcId, Tuple[Side, Side]]:
        sides: Dict[ArcId, List[Side]] = {a: [] for a in self.arcs}
        for t, arcs in self.triangles:
            for i, a in enumerate(arcs):
                sides[a].append((t, i))
        return {a: (s[0], s[1]) for a, s in sides.items()}

    def sides(self, arc: ArcId) -> Tuple[Side, Side]:
        return self.side_map[arc]

    def partner(self, side: Side) -> Side:
        t, i = side
        s0, s1 = self.side_map[self.triangle_map[t][i]]
        return s1 if s0 == side else s0

    def corner(self, t: TriId, i: int) -> str:
        return self.corner_map[t][i % 3]

    def corners_at(self, puncture: str) -> List[Corner]:
        return [(t, i) for t, ps in self.corners for i in range(3) if ps[i] == puncture]

    def endpoints(self, arc: ArcId) -> Tuple[str, str]:
        """(start, end) of the arc as read along its first side."""
        t, i = self.side_map[arc][0]
        return self.corner(t, i - 1), self.corner(t, i)

    def label(self, arc: ArcId) -> str:
        return dict(self.labels).get(arc, str(arc))

    @cached_property
    def chart_id(self) -> str:
        payload = json.dumps([[t, [str(a) for a in arcs]] for t, arcs in self.triangles], sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]

    def to_spec(self) -> dict:
        return {
            "surface": {"genus": self.surface.genus, "punctures": list(self.surface.punctures)},
            "triangulation": {
                "arcs": list(self.arcs),
                "triangles": [[{"arc": a} for a in arcs] for _, arcs in self.triangles],
                "triangle_ids": list(self.triangle_ids),
                "corners": [list(ps) for _, ps in self.corners],
                "labels": {str(a): name for a, name in self.labels},
            },
        }


@dataclass(frozen=True)
class ExchangeMatrix:
    arcs: Tuple[ArcId, ...]
    entries: Tuple[Tuple[int, ...], ...]

    @cached_property
    def index(self) -> Dict[ArcId, int]:
        return {a: i for i, a in enumerate(self.arcs)}

    def __getitem__(self, key: Tuple[ArcId, ArcId]) -> int:
        i, j = key
        return self.entries[self.index[i]][self.index[j]]

    def __len__(self) -> int:
        return len(self.arcs)

    def row(self, arc: ArcId) -> Tuple[int, ...]:
        return self.entries[self.index[arc]]

    def is_skew_symmetric(self) -> bool:
        n = len(self.arcs)
        return all(self.entries[i][j] == -self.entries[j][i] for i in range(n) for j in range(n))

    def to_lists(self) -> List[List[int]]:
        return [list(r) for r in self.entries]


# ── Flip words ───────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class FlipWord:
    """Mutation indices followed by one relabeling arc -> sigma(arc)."""
    flips: Tuple[ArcId, ...]
    sigma: Tuple[Tuple[ArcId, ArcId], ...] = field(default=())
    power: int = 1

    @classmethod
    def from_steps(cls, steps: Sequence[Mapping], arcs: Sequence[ArcId], power: int = 1) -> "FlipWord":
        """Normalize interleaved {flip: k} / {perm: [...]} steps into flips + a final sigma.

        A perm list gives the images of ``arcs`` in order.
        """
        current = {a: a for a in arcs}
        flips: List[ArcId] = []
        for step in steps:
            if "flip" in step:
                k = coerce_arc(step["flip"], arcs)
                inv = {v: u for u, v in current.items()}
                flips.append(inv[k])
            elif "perm" in step:
                images = [coerce_arc(x, arcs) for x in step["perm"]]
                if sorted(map(str, images)) != sorted(map(str, arcs)):
                    raise GluingInvalid("perm must be a permutation of the arcs", {"perm": list(step["perm"])})
                pi = dict(zip(arcs, images))
                current = {a: pi[current[a]] for a in arcs}
            else:
                raise GluingInvalid(f"unknown word step {step!r}")
        sigma = tuple((a, current[a]) for a in arcs if current[a] != a)
        return cls(tuple(flips), sigma, power)

    @property
    def sigma_map(self) -> Dict[ArcId, ArcId]:
        return dict(self.sigma)

    def apply_sigma(self, arc: ArcId) -> ArcId:
        return self.sigma_map.get(arc, arc)

    @property
    def length(self) -> int:
        return len(self.flips)

    def powered(self, r: int) -> "FlipWord":
        """The word of phi^r as a single flip sequence with its total relabeling."""
        sigma = self.sigma_map
        flips: List[ArcId] = []
        # track sigma^j as a dict on the arcs that appear anywhere
        support = set(sigma) | set(sigma.values()) | set(self.flips)
        current = {a: a for a in support}
        for _ in range(r):
            inv = {v: u for u, v in current.items()}
            flips.extend(inv.get(k, k) for k in self.flips)
            current = {a: sigma.get(current[a], current[a]) for a in support}
        total = tuple((a, b) for a, b in current.items() if a != b)
        return FlipWord(tuple(flips), tuple(sorted(total, key=lambda p: str(p[0]))), 1)

    def to_steps(self, arcs: Sequence[ArcId]) -> List[dict]:
        steps: List[dict] = [{"flip": k} for k in self.flips]
        if self.sigma:
            steps.append({"perm": [self.apply_sigma(a) for a in arcs]})
        return steps


def coerce_arc(value, arcs: Sequence[ArcId]) -> ArcId:
    if value in arcs:
        return value
    for a in arcs:
        if str(a) == str(value):
            return a
    raise GluingInvalid(f"unknown arc {value!r}", {"arc": value})


# ── Public API ───────────────────────────────────────────────────────────────


def build_triangulation(spec: Mapping) -> LabeledTriangulation:
    """Validate gluing data and compute the corner -> puncture map.

    ``spec`` is a document with ``surface`` ({genus, punctures}) and
    ``triangulation`` ({arcs, triangles, labels?, triangle_ids?, corners?}).
    Triangles are lists of three arc ids or of {"arc": id, "flip": bool}.
    """
    surf_spec = spec["surface"]
    surface = PuncturedSurface(int(surf_spec["genus"]), tuple(surf_spec["punctures"]))
    tri_spec = spec["triangulation"]
    arcs = tuple(tri_spec["arcs"])
    if len(arcs) != surface.arc_count:
        raise ArcCountMismatch(
            f"{len(arcs)} arcs given, surface needs 6g-6+3h = {surface.arc_count}",
            {"given": len(arcs), "expected": surface.arc_count},
        )
    if len(set(map(str, arcs))) != len(arcs):
        raise GluingInvalid("arc ids must be distinct")

    raw_triangles = tri_spec["triangles"]
    tids = tuple(str(t) for t in tri_spec.get("triangle_ids") or [f"t{i + 1}" for i in range(len(raw_triangles))])
    if len(tids) != len(raw_triangles) or len(set(tids)) != len(tids):
        raise GluingInvalid("triangle_ids must be distinct and match the triangle list")

    triangles = []
    flags: Dict[ArcId, List[bool]] = {}
    for tid, raw in zip(tids, raw_triangles):
        if len(raw) != 3:
            raise GluingInvalid(f"triangle {tid} has {len(raw)} sides", {"triangle": tid})
        sides = []
        for entry in raw:
            if isinstance(entry, Mapping):
                arc = coerce_arc(entry["arc"], arcs)
                if "flip" in entry:
                    flags.setdefault(arc, []).append(bool(entry["flip"]))
            else:
                arc = coerce_arc(entry, arcs)
            sides.append(arc)
        if len(set(sides)) < 3:
            raise SelfFolded(f"triangle {tid} uses an arc twice: {sides}", {"triangle": tid})
        triangles.append((tid, tuple(sides)))

    labels = tri_spec.get("labels") or {}
    label_pairs = tuple((a, str(labels.get(str(a), labels.get(a, a)))) for a in arcs)
    declared = tri_spec.get("corners")
    declared_corners = {tid: tuple(str(p) for p in c) for tid, c in zip(tids, declared)} if declared else None
    return _assemble(surface, arcs, tuple(triangles), label_pairs, declared_corners, flags)


def flip(tri: LabeledTriangulation, k: ArcId) -> LabeledTriangulation:
    """Replace arc k by the other diagonal of its quadrilateral.

    The two triangles at k, rotated to (k, a, b) and (k, c, d), become
    (a, k, d) and (b, c, k) under the same triangle ids.
    """
    k = coerce_arc(k, tri.arcs)
    quad = quadrilateral(tri, k)
    t1, t2 = quad.t1, quad.t2
    a, b, c, d = quad.a, quad.b, quad.c, quad.d
    p1, p2, p3, p4 = quad.punctures
    new_arcs = {t1: (a, k, d), t2: (b, c, k)}
    new_corners = {t1: (p2, p4, p1), t2: (p3, p4, p2)}
    triangles = tuple((t, new_arcs.get(t, arcs)) for t, arcs in tri.triangles)
    corners = tuple((t, new_corners.get(t, ps)) for t, ps in tri.corners)
    logger.debug(f"[Surface] flip {k}: {t1}={new_arcs[t1]} {t2}={new_arcs[t2]}")
    return LabeledTriangulation(tri.surface, tri.arcs, triangles, corners, tri.labels)


@dataclass(frozen=True)
class Quadrilateral:
    """The two triangles at an arc, rotated so the arc is side 0.

    Corners: p1 = end of k in t1, p2 = end of a, p3 = end of b (start of k in
    t1), p4 = end of c.
    """
    k: ArcId
    t1: TriId
    t2: TriId
    rot1: int
    rot2: int
    a: ArcId
    b: ArcId
    c: ArcId
    d: ArcId
    punctures: Tuple[str, str, str, str]


def quadrilateral(tri: LabeledTriangulation, k: ArcId) -> Quadrilateral:
    (t1, i1), (t2, i2) = tri.sides(k)
    if t1 == t2:
        raise FlipBlocked(f"arc {k} has both sides on triangle {t1}", {"arc": k})
    s1, s2 = tri.triangle_map[t1], tri.triangle_map[t2]
    a, b = s1[(i1 + 1) % 3], s1[(i1 + 2) % 3]
    c, d = s2[(i2 + 1) % 3], s2[(i2 + 2) % 3]
    if a == d or b == c:
        raise FlipBlocked(f"flipping arc {k} would create a self-folded triangle", {"arc": k})
    p1 = tri.corner(t1, i1)
    p2 = tri.corner(t1, i1 + 1)
    p3 = tri.corner(t1, i1 + 2)
    p4 = tri.corner(t2, i2 + 1)
    return Quadrilateral(k, t1, t2, i1, i2, a, b, c, d, (p1, p2, p3, p4))


def is_flippable(tri: LabeledTriangulation, k: ArcId) -> bool:
    try:
        quadrilateral(tri, k)
        return True
    except FlipBlocked:
        return False


def exchange_matrix(tri: LabeledTriangulation) -> ExchangeMatrix:
    n = len(tri.arcs)
    idx = tri.arc_index
    b = [[0] * n for _ in range(n)]
    for _, (x, y, z) in tri.triangles:
        for u, v in ((x, y), (y, z), (z, x)):
            b[idx[u]][idx[v]] += 1
            b[idx[v]][idx[u]] -= 1
    return ExchangeMatrix(tri.arcs, tuple(tuple(r) for r in b))


def relabel(tri: LabeledTriangulation, sigma: Mapping[ArcId, ArcId]) -> LabeledTriangulation:
    """Rename arc i to sigma(i) everywhere; the arc order is kept."""
    s = lambda a: sigma.get(a, a)
    triangles = tuple((t, tuple(s(a) for a in arcs)) for t, arcs in tri.triangles)
    labels = tuple((s(a), name) for a, name in tri.labels)
    labels = tuple(sorted(labels, key=lambda p: tri.arc_index[p[0]]))
    return LabeledTriangulation(tri.surface, tri.arcs, triangles, tri.corners, labels)


def permute_exchange(B: ExchangeMatrix, sigma: Mapping[ArcId, ArcId]) -> ExchangeMatrix:
    """b'_{sigma(i) sigma(j)} = b_ij."""
    n = len(B.arcs)
    idx = B.index
    out = [[0] * n for _ in range(n)]
    for i, ai in enumerate(B.arcs):
        for j, aj in enumerate(B.arcs):
            out[idx[sigma.get(ai, ai)]][idx[sigma.get(aj, aj)]] = B.entries[i][j]
    return ExchangeMatrix(B.arcs, tuple(tuple(r) for r in out))


def apply_word(tri: LabeledTriangulation, word: FlipWord) -> List[LabeledTriangulation]:
    """Charts visited by the flips of ``word`` (relabeling not applied)."""
    charts = [tri]
    for k in word.flips:
        charts.append(flip(charts[-1], k))
    return charts


def is_loop(path: FlipWord, tri: LabeledTriangulation) -> bool:
    """Flips then sigma give back the same exchange matrix."""
    from troptrack.modules.tropical import mutate_exchange

    B0 = exchange_matrix(tri)
    charts = apply_word(tri, path)
    B = B0
    for k in path.flips:
        B = mutate_exchange(B, k)
    if B != exchange_matrix(charts[-1]):  # pragma: no cover - guarded by tests
        raise GluingInvalid("flip and matrix mutation disagree")
    return permute_exchange(B, path.sigma_map) == B0


def triangulation_isomorphisms(src: LabeledTriangulation, dst: LabeledTriangulation) -> List[Dict[TriId, Tuple[TriId, int]]]:
    """Label-preserving combinatorial isomorphisms src -> dst.

    Each is a map t -> (t', r) with src side i of t matching dst side
    (i + r) % 3 of t'.
    """
    if set(map(str, src.arcs)) != set(map(str, dst.arcs)) or len(src.triangles) != len(dst.triangles):
        return []
    by_cycle: Dict[Tuple, List[Tuple[TriId, int]]] = {}
    for t, arcs in dst.triangles:
        for r in range(3):
            rotated = tuple(arcs[(i + r) % 3] for i in range(3))
            by_cycle.setdefault(rotated, []).append((t, r))
    options = []
    for t, arcs in src.triangles:
        cands = by_cycle.get(tuple(arcs), [])
        if not cands:
            return []
        options.append((t, cands))

    results: List[Dict[TriId, Tuple[TriId, int]]] = []

    def extend(i: int, current: Dict[TriId, Tuple[TriId, int]], used: set) -> None:
        if i == len(options):
            results.append(dict(current))
            return
        t, cands = options[i]
        for t2, r in cands:
            if t2 in used:
                continue
            current[t] = (t2, r)
            used.add(t2)
            extend(i + 1, current, used)
            used.discard(t2)
            del current[t]

    extend(0, {}, set())
    return results


def euler_characteristic(tri: LabeledTriangulation) -> int:
    """V - E + F of the closed glued complex (punctures filled in)."""
    return tri.surface.h - len(tri.arcs) + len(tri.triangles)


# ── Internal helpers ─────────────────────────────────────────────────────────


def _assemble(surface: PuncturedSurface, arcs: Tuple[ArcId, ...], triangles: Tuple,
              labels: Tuple, declared: Optional[Dict[TriId, Tuple[str, str, str]]],
              flags: Dict[ArcId, List[bool]]) -> LabeledTriangulation:
    sides: Dict[ArcId, List[Side]] = {a: [] for a in arcs}
    for tid, arc_triple in triangles:
        for i, a in enumerate(arc_triple):
            sides[a].append((tid, i))
    bad = {str(a): len(s) for a, s in sides.items() if len(s) != 2}
    if bad:
        raise GluingInvalid(f"arcs not used exactly twice: {bad}", {"uses": bad})
    for a, fl in flags.items():
        if len(fl) == 2 and fl[0] == fl[1]:
            raise GluingInvalid(f"arc {a} is glued without reversing orientation", {"arc": a})

    tri_arcs = dict(triangles)
    # corner (t, i) is the start of side i+1; the partner side ends there
    graph = nx.Graph()
    dual = nx.Graph()
    for tid, _ in triangles:
        dual.add_node(tid)
        for i in range(3):
            graph.add_node((tid, i))
    for tid, arc_triple in triangles:
        for i in range(3):
            side = (tid, (i + 1) % 3)
            s0, s1 = sides[tri_arcs[tid][(i + 1) % 3]]
            other = s1 if s0 == side else s0
            graph.add_edge((tid, i), other)
            dual.add_edge(tid, other[0])
    if not nx.is_connected(dual):
        raise GluingInvalid("triangles do not glue to a connected surface")

    classes = list(nx.connected_components(graph))
    chi = len(classes) - len(arcs) + len(triangles)
    if len(classes) != surface.h or chi != 2 - 2 * surface.genus:
        raise GluingInvalid(
            f"gluing gives {len(classes)} punctures and V-E+F = {chi}, expected {surface.h} and {2 - 2 * surface.genus}",
            {"vertices": len(classes), "euler": chi},
        )

    order = [(tid, i) for tid, _ in triangles for i in range(3)]
    names: Dict[frozenset, str] = {}
    if declared is not None:
        for cls in classes:
            seen = {declared[t][i] for t, i in cls}
            if len(seen) != 1:
                raise GluingInvalid(f"corners of one puncture carry labels {sorted(seen)}", {"labels": sorted(seen)})
            names[frozenset(cls)] = seen.pop()
        if sorted(names.values()) != sorted(surface.punctures):
            raise GluingInvalid("declared corner labels do not match the punctures",
                                {"declared": sorted(names.values()), "punctures": list(surface.punctures)})
    else:
        ordered = sorted(classes, key=lambda c: min(order.index(x) for x in c))
        for cls, name in zip(ordered, surface.punctures):
            names[frozenset(cls)] = name

    corner_of = {x: names[frozenset(cls)] for cls in classes for x in cls}
    corners = tuple((tid, tuple(corner_of[(tid, i)] for i in range(3))) for tid, _ in triangles)
    tri = LabeledTriangulation(surface, arcs, triangles, corners, labels)
    logger.debug(f"[Surface] built triangulation {tri.chart_id}: g={surface.genus} h={surface.h} arcs={len(arcs)}")
    return tri


def iter_flippable(tri: LabeledTriangulation) -> Iterable[ArcId]:
    return (k for k in tri.arcs if is_flippable(tri, k))
