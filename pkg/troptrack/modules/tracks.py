"""
Train tracks suited to a labeled triangulation.

A suited track is described triangle by triangle by the set of absent
corners of the freeway (the track with a long branch across every arc and
a short branch at every corner):

    III  nothing absent
    II   one corner absent
    I    two corners absent; the kept corner faces the side left uncrossed

Handles:
  - Structure: branches, switches, switch equations, complementary regions.
  - Enumeration: TT_△ (consistent, valid, recurrent) and complete tracks,
    one per maximal linearity domain of the tropical potential.
  - Cones and charts: measure cones, the measure map a -> ν_τ(a) and the
    square chart (ν_τ on B_τ, w_p) with its exact inverse.
  - Flip relations: the λ-successors of a complete track under a flip, the
    table cell of its missing corners, chain cases and cone identities.
  - Carrying: per-flip transition matrices, realized by elementary moves
    when the move search finds them, else taken from the A-chart.

Usage:
    from troptrack.modules.tracks import enumerate_complete_tracks, lambda_relation

    tracks = enumerate_complete_tracks(tri)
    successors = lambda_relation(tracks[0], 1)
"""
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
from tqdm import tqdm

from troptrack.config import get_settings
from troptrack.errors import MoveNotApplicable, NotCarried, TrackInvalid
from troptrack.modules.polyhedra import PolyCone
from troptrack.modules.potential import (
    corner_form,
    corner_forms,
    domain_cone,
    enumerate_domains,
    facet_key,
)
from troptrack.modules.surface import (
    ArcId,
    Corner,
    LabeledTriangulation,
    TriId,
    exchange_matrix,
    flip,
    quadrilateral,
)
from troptrack.modules.train_graph import ElementaryMove, TrackGraph, search_realization
from troptrack.modules.tropical import a_mutation_pieces
from troptrack.utils.linalg import (
    Mat,
    Row,
    dot,
    greedy_independent_rows,
    identity,
    inverse,
    matmul,
    matvec,
    nullspace_basis,
    rational_rank,
)

logger = logging.getLogger(__name__)

EMPTY = "∅"

# configurations of one triangle, as absent-corner tuples
CONFIGURATIONS: Tuple[Tuple[int, ...], ...] = ((), (0,), (1,), (2,), (1, 2), (0, 2), (0, 1))

# cell of missing corners -> (chain case, move names)
LAMBDA_TABLE: Dict[Tuple[str, str], Tuple[str, Tuple[str, ...]]] = {
    ("p1", "p4"): ("1:1", ("shift",)),
    ("p2", "p1"): ("1:1", ("shift",)),
    ("p2", "p3"): ("1:1", ("shift",)),
    ("p3", "p4"): ("1:1", ("shift",)),
    (EMPTY, EMPTY): ("1:1", ("split", "shift", "fold")),
    ("p1", "p3"): ("2:1", ("fold",)),
    ("p1", EMPTY): ("2:1", ("shift", "fold")),
    ("p3", "p1"): ("2:1", ("fold",)),
    ("p3", EMPTY): ("2:1", ("shift", "fold")),
    (EMPTY, "p1"): ("2:1", ("shift", "fold")),
    (EMPTY, "p3"): ("2:1", ("shift", "fold")),
    ("p2", "p4"): ("1:2", ("split",)),
    ("p2", EMPTY): ("1:2", ("split", "shift")),
    (EMPTY, "p4"): ("1:2", ("split", "shift")),
    ("p1", "p1"): ("×", ()),
    ("p3", "p3"): ("×", ()),
}


# ── Tracks ───────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class TrainTrack:
    base: LabeledTriangulation
    absent: Tuple[Tuple[TriId, Tuple[int, ...]], ...]

    @classmethod
    def from_absent(cls, base: LabeledTriangulation, absent: Mapping[TriId, Iterable[int]]) -> "TrainTrack":
        """Build and check consistency: an uncrossed side must face an uncrossed side."""
        unknown = set(absent) - set(base.triangle_ids)
        if unknown:
            raise TrackInvalid(f"unknown triangles {sorted(unknown)}", {"triangles": sorted(unknown)})
        rows = []
        for t in base.triangle_ids:
            corners = tuple(sorted({int(c) % 3 for c in absent.get(t, ())}))
            if len(corners) > 2:
                raise TrackInvalid(f"triangle {t} cannot lose all three corners", {"triangle": t})
            rows.append((t, corners))
        track = cls(base, tuple(rows))
        for arc in base.arcs:
            s0, s1 = base.sides(arc)
            if bool(track.side_shorts(*s0)) != bool(track.side_shorts(*s1)):
                raise TrackInvalid(f"arc {arc} is crossed on one side only", {"arc": str(arc)})
        return track

    @cached_property
    def absent_map(self) -> Dict[TriId, FrozenSet[int]]:
        return {t: frozenset(c) for t, c in self.absent}

    def is_present(self, t: TriId, c: int) -> bool:
        return c % 3 not in self.absent_map[t]

    def triangle_type(self, t: TriId) -> str:
        return ("III", "II", "I")[len(self.absent_map[t])]

    def short_id(self, t: TriId, c: int) -> str:
        return f"u:{t}:{c % 3}"

    def long_id(self, arc: ArcId) -> str:
        return f"L{arc}"

    def switch_id(self, t: TriId, i: int) -> str:
        return f"s:{t}:{i % 3}"

    def side_shorts(self, t: TriId, i: int) -> List[str]:
        """Shorts ending on side i, left (corner i) then right (corner i-1)."""
        return [self.short_id(t, c) for c in (i, i - 1) if self.is_present(t, c)]

    def crossed(self, arc: ArcId) -> bool:
        t, i = self.base.sides(arc)[0]
        return bool(self.side_shorts(t, i))

    @cached_property
    def long_branches(self) -> Tuple[str, ...]:
        return tuple(self.long_id(a) for a in self.base.arcs if self.crossed(a))

    @cached_property
    def short_branches(self) -> Tuple[str, ...]:
        return tuple(self.short_id(t, c) for t in self.base.triangle_ids for c in range(3) if self.is_present(t, c))

    @cached_property
    def branches(self) -> Tuple[str, ...]:
        return self.long_branches + self.short_branches

    @cached_property
    def switches(self) -> Tuple[Tuple[str, Tuple[str, ...], Tuple[str, ...]], ...]:
        out = []
        for t in self.base.triangle_ids:
            for i in range(3):
                shorts = self.side_shorts(t, i)
                if shorts:
                    arc = self.base.triangle_map[t][i]
                    out.append((self.switch_id(t, i), tuple(shorts), (self.long_id(arc),)))
        return tuple(out)

    @cached_property
    def switch_matrix(self) -> Mat:
        """Rows ν(L) - Σ ν(shorts) = 0 over ``branches``."""
        idx = {b: i for i, b in enumerate(self.branches)}
        rows = []
        for _, inn, out in self.switches:
            row = [Fraction(0)] * len(idx)
            for b in out:
                row[idx[b]] += 1
            for b in inn:
                row[idx[b]] -= 1
            rows.append(tuple(row))
        return tuple(rows)

    @cached_property
    def key(self) -> str:
        parts = []
        for t, corners in self.absent:
            kind = self.triangle_type(t)
            parts.append(f"{t}={kind}" + (":" + "".join(map(str, corners)) if corners else ""))
        return "|".join(parts)

    def to_dict(self) -> dict:
        return {
            "chart": self.base.chart_id,
            "key": self.key,
            "triangles": {t: {"type": self.triangle_type(t), "absent": list(c)} for t, c in self.absent},
            "branches": list(self.branches),
            "switches": [{"id": s, "in": list(i), "out": list(o)} for s, i, o in self.switches],
        }


@dataclass(frozen=True)
class Region:
    pieces: Tuple[str, ...]
    euler: int
    cusps: int
    punctures: Tuple[str, ...]

    @property
    def index(self) -> int:
        """Doubled Euler characteristic minus cusps; negative for a valid region."""
        return 2 * self.euler - self.cusps

    @property
    def kind(self) -> str:
        names = {0: "null-gon", 1: "monogon", 2: "bigon", 3: "trigon"}
        gon = names.get(self.cusps, f"{self.cusps}-gon")
        if self.euler == 1 and not self.punctures:
            return gon
        if self.euler == 0 and len(self.punctures) == 1:
            return f"punctured {gon}"
        return f"surface(chi={self.euler}, cusps={self.cusps}, punctures={len(self.punctures)})"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "euler": self.euler, "cusps": self.cusps, "punctures": list(self.punctures)}


@dataclass(frozen=True)
class MeasureCone:
    track_key: str
    branches: Tuple[str, ...]
    equalities: Mat
    dim: int
    spanning: Tuple[str, ...]

    def polycone(self) -> PolyCone:
        n = len(self.branches)
        return PolyCone(n, self.equalities, identity(n))

    def contains(self, nu: Mapping[str, Fraction]) -> bool:
        return self.polycone().contains([Fraction(nu.get(b, 0)) for b in self.branches])

    def to_dict(self) -> dict:
        return {"track": self.track_key, "branches": list(self.branches), "dim": self.dim,
                "spanning": list(self.spanning),
                "equalities": [[str(x) for x in r] for r in self.equalities]}


@dataclass(frozen=True)
class ChartMap:
    """a -> (ν_τ(b) for b in B_τ, w_p(a) for each puncture), with its inverse."""
    track_key: str
    rows: Tuple[str, ...]
    matrix: Mat
    inverse: Mat

    def apply(self, a: Sequence[Fraction]) -> Tuple[Fraction, ...]:
        return matvec(self.matrix, a)

    def invert(self, coords: Sequence[Fraction]) -> Tuple[Fraction, ...]:
        return matvec(self.inverse, coords)


# ── Structure ────────────────────────────────────────────────────────────────


def freeway(tri: LabeledTriangulation) -> TrainTrack:
    return TrainTrack.from_absent(tri, {})


def complementary_regions(track: TrainTrack) -> List[Region]:
    """Regions of the surface cut along the track.

    Each triangle contributes a corner piece K(t, c) for every present short
    and one central piece Z(t). Half-sides are owned by the corner piece at
    their end, or by Z when that corner is absent; gluing across crossed arcs
    pairs the end half of one side with the start half of the other.
    """
    tri = track.base
    g = nx.MultiGraph()

    def end_half(t, i):
        return ("K", t, i % 3) if track.is_present(t, i) else ("Z", t)

    def start_half(t, i):
        return ("K", t, (i - 1) % 3) if track.is_present(t, i - 1) else ("Z", t)

    cusps: Dict[Tuple, int] = {}
    puncture_of: Dict[Tuple, set] = {}
    for t in tri.triangle_ids:
        z = ("Z", t)
        g.add_node(z)
        cusps[z] = sum(1 for i in range(3) if len(track.side_shorts(t, i)) == 2)
        for c in range(3):
            owner = end_half(t, c)
            g.add_node(owner)
            puncture_of.setdefault(owner, set()).add(tri.corner(t, c))
    for arc in tri.arcs:
        (t0, i0), (t1, i1) = tri.sides(arc)
        if track.crossed(arc):
            g.add_edge(end_half(t0, i0), start_half(t1, i1))
            g.add_edge(start_half(t0, i0), end_half(t1, i1))
        else:
            g.add_edge(("Z", t0), ("Z", t1))

    regions = []
    for comp in nx.connected_components(g):
        sub = g.subgraph(comp)
        euler = sub.number_of_nodes() - sub.number_of_edges()
        cusp = sum(cusps.get(n, 0) for n in comp)
        punct = sorted(set().union(*(puncture_of.get(n, set()) for n in comp)))
        names = tuple(sorted(":".join(map(str, n)) for n in comp))
        regions.append(Region(names, euler, cusp, tuple(punct)))
    return sorted(regions, key=lambda r: r.pieces)


def is_train_track(track: TrainTrack) -> bool:
    return all(r.index < 0 for r in complementary_regions(track))


def is_recurrent(track: TrainTrack) -> bool:
    """Some measure is positive on every branch."""
    n = len(track.branches)
    return PolyCone(n, track.switch_matrix, identity(n)).strict_interior_point() is not None


def is_complete(track: TrainTrack) -> bool:
    """Types II/III only, regions trigons or once-punctured monogons, recurrent.

    On the once-punctured torus the single puncture region is a punctured
    bigon instead.
    """
    if any(track.triangle_type(t) == "I" for t in track.base.triangle_ids):
        return False
    torus = track.base.surface.genus == 1 and track.base.surface.h == 1
    allowed = {"trigon", "punctured monogon"} | ({"punctured bigon"} if torus else set())
    if any(r.kind not in allowed for r in complementary_regions(track)):
        return False
    return is_recurrent(track)


def apply_move(track: TrainTrack, kind: str, branch: str) -> Tuple[TrackGraph, ElementaryMove]:
    return TrackGraph.from_track(track).apply(kind, branch)


def lift_measure(move: ElementaryMove, nu: Mapping[str, Fraction]) -> Dict[str, Fraction]:
    return move.lift_measure(nu)


# ── Enumeration ──────────────────────────────────────────────────────────────


def _crossed_sides(corners: Tuple[int, ...]) -> Tuple[bool, ...]:
    """Side i is crossed when corner i or corner i-1 keeps its short."""
    return tuple(i not in corners or (i - 1) % 3 not in corners for i in range(3))


_CROSSED = {c: _crossed_sides(c) for c in CONFIGURATIONS}


def consistent_assignments(tri: LabeledTriangulation) -> Iterator[Dict[TriId, Tuple[int, ...]]]:
    """Per-triangle configurations whose glued sides agree on being crossed.

    Triangles are filled in order; a partial assignment is dropped as soon as
    one of its sides disagrees with an already assigned partner.
    """
    tids = tri.triangle_ids
    pos = {t: j for j, t in enumerate(tids)}
    chosen: Dict[TriId, Tuple[int, ...]] = {}

    def extend(j: int) -> Iterator[Dict[TriId, Tuple[int, ...]]]:
        if j == len(tids):
            yield dict(chosen)
            return
        t = tids[j]
        for config in CONFIGURATIONS:
            chosen[t] = config
            if all(pos[pt] > j or _CROSSED[chosen[pt]][pi] == _CROSSED[config][i]
                   for i in range(3) for pt, pi in (tri.partner((t, i)),)):
                yield from extend(j + 1)
            del chosen[t]

    yield from extend(0)


def enumerate_suited_tracks(tri: LabeledTriangulation) -> List[TrainTrack]:
    """TT_△: consistent, valid and recurrent per-triangle configurations."""
    settings = get_settings()
    found = []
    for absent in tqdm(consistent_assignments(tri), disable=not settings.progress, desc="tracks", leave=False):
        track = TrainTrack.from_absent(tri, absent)
        if is_train_track(track) and is_recurrent(track):
            found.append(track)
    logger.info(f"[Tracks] {len(found)} suited tracks on {tri.chart_id}")
    return found


def track_for_domain(tri: LabeledTriangulation, choice: Mapping[str, Corner]) -> TrainTrack:
    """Freeway minus every short whose corner form equals its puncture's active form."""
    absent: Dict[TriId, List[int]] = {t: [] for t in tri.triangle_ids}
    active = {p: corner_form(tri, tuple(c)).coeffs for p, c in choice.items()}
    for f in corner_forms(tri):
        if f.coeffs == active[f.puncture]:
            absent[f.triangle].append(f.corner)
    return TrainTrack.from_absent(tri, absent)


@lru_cache(maxsize=64)
def enumerate_complete_tracks(tri: LabeledTriangulation) -> Tuple[TrainTrack, ...]:
    tracks = []
    for dom in enumerate_domains(tri):
        track = track_for_domain(tri, dom.choice_map)
        if not is_complete(track):
            logger.warning(f"[Tracks] domain {dom.choice} gives a track that is not complete, skipped: {track.key}")
            continue
        tracks.append(track)
    return tuple(tracks)


def track_choice(track: TrainTrack) -> Dict[str, Corner]:
    """Active corner of each puncture, read off the absent shorts."""
    tri = track.base
    choice: Dict[str, Corner] = {}
    for p in tri.surface.punctures:
        gone = [(t, c) for t, c in tri.corners_at(p) if not track.is_present(t, c)]
        if not gone:
            raise TrackInvalid(f"track keeps every corner at {p}; it is not complete", {"puncture": p})
        forms = {corner_form(tri, c).coeffs for c in gone}
        if len(forms) != 1:
            raise TrackInvalid(f"absent corners at {p} carry different forms", {"puncture": p})
        choice[p] = gone[0]
    return choice


def track_domain(track: TrainTrack, restrict_to_V: bool = False) -> PolyCone:
    return domain_cone(track.base, track_choice(track), restrict_to_V)


# ── Cones and charts ─────────────────────────────────────────────────────────


@lru_cache(maxsize=1024)
def measure_rows(track: TrainTrack) -> Dict[str, Row]:
    """Linear forms a -> ν_τ(b)(a) for every branch of a complete track."""
    tri = track.base
    choice = track_choice(track)
    w = {p: corner_form(tri, c).coeffs for p, c in choice.items()}
    rows: Dict[str, Row] = {}
    for arc in tri.arcs:
        if not track.crossed(arc):
            continue
        p, q = tri.endpoints(arc)
        row = [-(x + y) for x, y in zip(w[p], w[q])]
        row[tri.arc_index[arc]] -= 2
        rows[track.long_id(arc)] = tuple(row)
    for f in corner_forms(tri):
        if track.is_present(f.triangle, f.corner):
            rows[track.short_id(f.triangle, f.corner)] = tuple(x - y for x, y in zip(f.coeffs, w[f.puncture]))
    return {b: rows[b] for b in track.branches}


def measure_from_point(track: TrainTrack, a: Sequence[Fraction]) -> Dict[str, Fraction]:
    values = tuple(Fraction(x) for x in getattr(a, "values", a))
    return {b: dot(r, values) for b, r in measure_rows(track).items()}


def _w_rows(track: TrainTrack) -> List[Row]:
    choice = track_choice(track)
    return [corner_form(track.base, choice[p]).coeffs for p in track.base.surface.punctures]


def spanning_branches(track: TrainTrack) -> Tuple[str, ...]:
    """B_τ: long branches first, greedily completing the w_p rows to a basis."""
    try:
        rows = measure_rows(track)
        w_rows = _w_rows(track)
    except TrackInvalid:
        basis = nullspace_basis(track.switch_matrix, len(track.branches))
        cols = [tuple(v[i] for v in basis) for i in range(len(track.branches))]
        return tuple(track.branches[i] for i in greedy_independent_rows(cols))
    order = list(track.branches)
    picked = greedy_independent_rows(w_rows + [rows[b] for b in order])
    return tuple(order[i - len(w_rows)] for i in picked if i >= len(w_rows))


@lru_cache(maxsize=1024)
def cone(track: TrainTrack) -> MeasureCone:
    n = len(track.branches)
    eqs = track.switch_matrix
    if is_recurrent(track):
        dim = n - rational_rank(eqs)
    else:
        dim = PolyCone(n, eqs, identity(n)).dimension()
    return MeasureCone(track.key, track.branches, eqs, dim, spanning_branches(track))


@lru_cache(maxsize=1024)
def chart_map(track: TrainTrack) -> ChartMap:
    rows = measure_rows(track)
    spanning = spanning_branches(track)
    matrix = tuple(rows[b] for b in spanning) + tuple(_w_rows(track))
    if len(matrix) != len(track.base.arcs):
        raise TrackInvalid(f"chart of {track.key} is not square ({len(matrix)} rows)", {"track": track.key})
    labels = spanning + tuple(f"w:{p}" for p in track.base.surface.punctures)
    return ChartMap(track.key, labels, matrix, inverse(matrix))


# ── Flip relations ───────────────────────────────────────────────────────────


@dataclass(frozen=True)
class LambdaSuccessor:
    track: TrainTrack
    case: str
    pieces: Tuple[str, ...]
    cell: Tuple[str, str]
    moves: Tuple[str, ...]
    witness: Tuple[Tuple[str, Tuple[Fraction, ...]], ...] = field(default=())
    agrees: bool = True

    def to_dict(self) -> dict:
        return {"track": self.track.key, "case": self.case, "pieces": list(self.pieces),
                "cell": list(self.cell), "moves": list(self.moves), "table_agrees": self.agrees}


@dataclass(frozen=True)
class LambdaGraph:
    left: Tuple[TrainTrack, ...]
    right: Tuple[TrainTrack, ...]
    edges: Tuple[Tuple[int, int, str, Tuple[Fraction, ...]], ...]

    def components(self) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
        g = nx.Graph()
        g.add_nodes_from(("L", i) for i in range(len(self.left)))
        g.add_nodes_from(("R", j) for j in range(len(self.right)))
        for i, j, _, _ in self.edges:
            g.add_edge(("L", i), ("R", j))
        out = []
        for comp in nx.connected_components(g):
            lefts = tuple(sorted(i for s, i in comp if s == "L"))
            rights = tuple(sorted(j for s, j in comp if s == "R"))
            out.append((lefts, rights))
        return sorted(out)

    def case_of(self, left_index: int) -> str:
        for lefts, rights in self.components():
            if left_index in lefts:
                return chain_case(len(lefts), len(rights))
        raise KeyError(left_index)


def chain_case(n_left: int, n_right: int) -> str:
    return f"{n_left}:{n_right}"


def lambda_table_cell(track: TrainTrack, k: ArcId) -> Tuple[str, str]:
    """Positions (p1..p4 or ∅) of the missing corners in the two triangles at k."""
    quad = quadrilateral(track.base, k)
    names1, names2 = ("p1", "p2", "p3"), ("p3", "p4", "p1")
    cell = []
    for t, rot, names in ((quad.t1, quad.rot1, names1), (quad.t2, quad.rot2, names2)):
        gone = sorted(track.absent_map[t])
        if len(gone) > 1:
            raise TrackInvalid(f"triangle {t} is type I; no table cell", {"triangle": t})
        cell.append(names[(gone[0] - rot) % 3] if gone else EMPTY)
    return cell[0], cell[1]


def _agree_outside(track: TrainTrack, other: TrainTrack, quad_triangles: Tuple[TriId, TriId]) -> bool:
    return all(track.absent_map[t] == other.absent_map[t] for t in track.base.triangle_ids
               if t not in quad_triangles)


def _half_space(wall: Row, piece: str) -> Row:
    # piece "+" lives on wall <= 0
    return tuple(-x for x in wall) if piece == "+" else tuple(wall)


@lru_cache(maxsize=256)
def lambda_graph(tri: LabeledTriangulation, k: ArcId) -> LambdaGraph:
    """Bipartite λ-relation between complete tracks on tri and on flip(tri, k).

    τ relates to τ' through a piece of the A-flip when some a in the interior
    of 𝒱̃(τ), on the open side of that piece, lands in the interior of 𝒱̃(τ').
    """
    flipped = flip(tri, k)
    quad = quadrilateral(tri, k)
    pieces = a_mutation_pieces(exchange_matrix(tri), k)
    left = enumerate_complete_tracks(tri)
    right = enumerate_complete_tracks(flipped)
    edges = []
    for i, tau in enumerate(left):
        dom = track_domain(tau)
        for j, tau2 in enumerate(right):
            if not _agree_outside(tau, tau2, (quad.t1, quad.t2)):
                continue
            target = track_domain(tau2)
            for piece in ("+", "-"):
                pulled = target.preimage(pieces[piece])
                extra = (_half_space(pieces["wall"], piece),) + pulled.inequalities
                point = dom.strict_interior_point(extra_strict=extra)
                if point is not None:
                    edges.append((i, j, piece, point))
    graph = LambdaGraph(left, right, tuple(edges))
    logger.info(f"[Tracks] λ at {k}: {len(left)} -> {len(right)} tracks, {len(edges)} related pieces")
    return graph


def lambda_relation(track: TrainTrack, k: ArcId) -> List[LambdaSuccessor]:
    """λ-successors of a complete track under the flip at k."""
    tri = track.base
    graph = lambda_graph(tri, k)
    try:
        i = graph.left.index(track)
    except ValueError:
        raise TrackInvalid(f"{track.key} is not a complete track of this chart", {"track": track.key})
    cell = lambda_table_cell(track, k)
    table_case, moves = LAMBDA_TABLE.get(cell, ("×", ()))
    case = graph.case_of(i)
    agrees = case == table_case
    if not agrees:
        logger.warning(f"[Tracks] table cell {cell} says {table_case}, cones say {case} for {track.key}")
    by_target: Dict[int, List[Tuple[str, Tuple[Fraction, ...]]]] = {}
    for li, j, piece, point in graph.edges:
        if li == i:
            by_target.setdefault(j, []).append((piece, point))
    out = []
    for j, found in sorted(by_target.items()):
        out.append(LambdaSuccessor(graph.right[j], case, tuple(p for p, _ in found), cell, moves,
                                   tuple(found), agrees))
    return out


def lambda_components(tri: LabeledTriangulation, k: ArcId) -> List[Tuple[Tuple[TrainTrack, ...], Tuple[TrainTrack, ...], str]]:
    graph = lambda_graph(tri, k)
    return [(tuple(graph.left[i] for i in ls), tuple(graph.right[j] for j in rs), chain_case(len(ls), len(rs)))
            for ls, rs in graph.components()]


def verify_cone_identity(tri: LabeledTriangulation, k: ArcId, lefts: Sequence[TrainTrack],
                         rights: Sequence[TrainTrack]) -> bool:
    """The A-flip maps the union of the left domains onto the union of the right ones.

    Domains of complete tracks tile the space, so it suffices that every
    flipped piece of a left domain misses the interiors of all right domains
    outside the component, and symmetrically for pulled-back right domains.
    """
    flipped = flip(tri, k)
    pieces = a_mutation_pieces(exchange_matrix(tri), k)
    halves = {p: PolyCone(len(tri.arcs), (), (_half_space(pieces["wall"], p),)) for p in ("+", "-")}
    others_right = [track_domain(t) for t in enumerate_complete_tracks(flipped) if t not in rights]
    others_left = [track_domain(t) for t in enumerate_complete_tracks(tri) if t not in lefts]
    for piece in ("+", "-"):
        mat = pieces[piece]
        for tau in lefts:
            # each piece is an involution, so the image is the preimage under the same matrix
            image = track_domain(tau).intersect(halves[piece]).preimage(mat)
            if not image.is_full_dimensional():
                continue
            if any(image.meets_interior_of(o) for o in others_right):
                return False
        for tau2 in rights:
            pulled = halves[piece].intersect(track_domain(tau2).preimage(mat))
            if not pulled.is_full_dimensional():
                continue
            if any(pulled.meets_interior_of(o) for o in others_left):
                return False
    return True


def fan_adjacency(tri: LabeledTriangulation) -> List[Tuple[str, str]]:
    """Pairs of complete tracks whose domains share a facet."""
    tracks = enumerate_complete_tracks(tri)
    cones = [track_domain(t) for t in tracks]
    n = len(tri.arcs)
    out = []
    for i, j in itertools.combinations(range(len(tracks)), 2):
        if facet_key(cones[i]) == facet_key(cones[j]):
            continue
        if cones[i].intersect(cones[j]).dimension() == n - 1:
            out.append((tracks[i].key, tracks[j].key))
    return out


# ── Transitions and carrying ─────────────────────────────────────────────────


@dataclass(frozen=True)
class StepTransition:
    before: TrainTrack
    after: TrainTrack
    flip: ArcId
    piece: str
    matrix: Mat
    realized: bool
    moves: Tuple[ElementaryMove, ...] = ()


@dataclass(frozen=True)
class CarryingResult:
    tracks: Tuple[TrainTrack, ...]
    final: TrainTrack
    matrix: Mat
    realized: Tuple[bool, ...]
    pieces: Tuple[str, ...]
    reference: Optional[Tuple[Fraction, ...]] = None

    def to_dict(self) -> dict:
        return {
            "tracks": [t.key for t in self.tracks],
            "rows": list(self.tracks[0].branches),
            "columns": list(self.final.branches),
            "matrix": [[str(x) for x in r] for r in self.matrix],
            "realized": list(self.realized),
            "pieces": list(self.pieces),
        }


def flip_transition(track: TrainTrack, successor: TrainTrack, k: ArcId, piece: str) -> Mat:
    """A-chart transition |B(τ)| x |B(τ')| on the slice w = 0.

    ν_τ = N_τ · L · C_τ'^{-1} · E ν_τ', where L is the piece of the A-flip
    and E places the B_τ' coordinates into the chart with w = 0.
    """
    pieces = a_mutation_pieces(exchange_matrix(track.base), k)
    rows = measure_rows(track)
    n_tau = tuple(rows[b] for b in track.branches)
    chart2 = chart_map(successor)
    cols = successor.branches
    spanning = chart2.rows[: len(chart2.rows) - len(track.base.surface.punctures)]
    n = len(track.base.arcs)
    embed = [[Fraction(0)] * len(cols) for _ in range(n)]
    for r, b in enumerate(spanning):
        embed[r][cols.index(b)] = Fraction(1)
    return matmul(matmul(matmul(n_tau, pieces[piece]), chart2.inverse), embed)


def _slice_witness(track: TrainTrack, k: ArcId, successor: TrainTrack, piece: str) -> Optional[Tuple[Fraction, ...]]:
    pieces = a_mutation_pieces(exchange_matrix(track.base), k)
    dom = track_domain(track, restrict_to_V=True)
    pulled = track_domain(successor).preimage(pieces[piece])
    extra = (_half_space(pieces["wall"], piece),) + pulled.inequalities
    return dom.strict_interior_point(extra_strict=extra)


def realize_flip(track: TrainTrack, k: ArcId, successor: TrainTrack, piece: str,
                 max_depth: int = 4) -> Optional[StepTransition]:
    """Elementary moves inside the quadrilateral carrying τ onto τ'."""
    point = _slice_witness(track, k, successor, piece)
    if point is None:
        return None
    quad = quadrilateral(track.base, k)
    internal_prefixes = (f"u:{quad.t1}:", f"u:{quad.t2}:", "[")
    long_k = track.long_id(k)

    def is_internal(branch: str) -> bool:
        return branch == long_k or branch.startswith(internal_prefixes)

    pieces = a_mutation_pieces(exchange_matrix(track.base), k)
    moved = matvec(pieces[piece], point)
    nu = measure_from_point(track, point)
    nu2 = measure_from_point(successor, moved)
    start, target = TrackGraph.from_track(track), TrackGraph.from_track(successor)
    start_measure = {bid: nu[br.ids[0]] for bid, br in start.branches.items()}
    target_measure = {bid: nu2[br.ids[0]] for bid, br in target.branches.items()}
    found = search_realization(start, target, is_internal, start_measure, target_measure, max_depth)
    if found is None:
        return None

    rows = track.branches
    cols = successor.branches
    chain_row = {r: i for i, r in enumerate(found.before)}
    after_col = {c: i for i, c in enumerate(found.after)}
    matrix = [[Fraction(0)] * len(cols) for _ in rows]
    for r, b in enumerate(rows):
        src = found.matrix[chain_row[start.chain_of(b)]]
        for g, (h, _) in found.branch_map.items():
            v = src[after_col[g]]
            if v:
                matrix[r][cols.index(target.branches[h].ids[0])] += v
    matrix = tuple(tuple(r) for r in matrix)
    check = matvec(matrix, [nu2[b] for b in cols])
    if check != tuple(nu[b] for b in rows):
        logger.warning(f"[Tracks] move realization at {k} does not carry the witness measure")
        return None
    return StepTransition(track, successor, k, piece, matrix, True, found.moves)


@lru_cache(maxsize=1024)
def step_transition(track: TrainTrack, k: ArcId, successor: TrainTrack, piece: str) -> StepTransition:
    try:
        realized = realize_flip(track, k, successor, piece)
    except MoveNotApplicable:  # pragma: no cover - the search skips inapplicable moves
        realized = None
    if realized is not None:
        logger.debug(f"[Tracks] flip {k}: {len(realized.moves)} moves realize {track.key} -> {successor.key}")
        return realized
    logger.warning(f"[Tracks] no move sequence of depth <= 4 realizes flip {k} on {track.key}; "
                   f"using the A-chart transition")
    return StepTransition(track, successor, k, piece, flip_transition(track, successor, k, piece), False)


def _side(wall: Row, a: Sequence[Fraction]) -> Tuple[str, ...]:
    v = dot(wall, a)
    if v < 0:
        return ("+",)
    if v > 0:
        return ("-",)
    return ("+", "-")


def carrying_matrix(track: TrainTrack, flips: Iterable[ArcId], reference=None,
                    max_results: int = 64) -> List[CarryingResult]:
    """Transition matrices along a flip sequence, one result per branch of choices.

    With a reference A-point the successor is the one whose domain holds the
    flipped point (ties branch); without one every λ-successor is followed.
    """
    flips = tuple(getattr(flips, "flips", flips))
    if reference is not None:
        ref = tuple(Fraction(x) for x in getattr(reference, "values", reference))
        if not track_domain(track).contains(ref):
            raise NotCarried(f"reference point is not in the domain of {track.key}", {"track": track.key})
    else:
        ref = None
    states = [((track,), identity(len(track.branches)), (), (), ref)]
    for k in flips:
        nxt = []
        for path, mat, realized, used, point in states:
            tau = path[-1]
            pieces = a_mutation_pieces(exchange_matrix(tau.base), k)
            options = []
            for succ in lambda_relation(tau, k):
                if point is None:
                    options.append((succ, succ.pieces[0], None))
                    continue
                sides = [p for p in _side(pieces["wall"], point) if p in succ.pieces]
                moved = matvec(pieces[_side(pieces["wall"], point)[0]], point)
                if track_domain(succ.track).contains(moved):
                    options.append((succ, sides[0] if sides else succ.pieces[0], moved))
            for succ, piece, moved in options:
                step = step_transition(tau, k, succ.track, piece)
                nxt.append((path + (succ.track,), matmul(mat, step.matrix), realized + (step.realized,),
                            used + (piece,), moved))
        if not nxt:
            raise NotCarried(f"no λ-successor at flip {k} holds the reference point", {"flip": str(k)})
        states = nxt[:max_results]
        if len(nxt) > max_results:
            logger.warning(f"[Tracks] carrying tree truncated to {max_results} branches")
    return [CarryingResult(path, path[-1], mat, realized, used, point) for path, mat, realized, used, point in states]
