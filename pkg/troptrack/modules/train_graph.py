"""
Ribbon-graph form of a train track and its elementary moves.

A switch stores two ordered lists of half-branches, ``inn`` and ``out``,
both read left to right while facing along ``out``. A half-branch is
(branch id, end) with end 0 or 1. Bivalent switches are smoothed away, so
a branch of the graph is a chain of branches of the suited track; its
``constituents`` record which ones, in order from end 0 to end 1.

Moves are read in a traveler frame: departing a switch along a branch, the
lists behind and ahead are reoriented so left and right are the traveler's.

Usage:
    from troptrack.modules.train_graph import TrackGraph

    g = TrackGraph.from_track(track)
    g2, move = g.apply("left-split", "L1")
"""
import copy
import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from troptrack.errors import MoveNotApplicable

logger = logging.getLogger(__name__)

HalfBranch = Tuple[str, int]

MOVE_KINDS = ("left-split", "right-split", "central-split", "shift", "fold")


@dataclass
class Switch:
    inn: List[HalfBranch]
    out: List[HalfBranch]

    def side_of(self, hb: HalfBranch) -> Tuple[str, int]:
        if hb in self.inn:
            return "inn", self.inn.index(hb)
        if hb in self.out:
            return "out", self.out.index(hb)
        raise KeyError(hb)

    def replace(self, old: HalfBranch, new: HalfBranch) -> None:
        for lst in (self.inn, self.out):
            for i, x in enumerate(lst):
                if x == old:
                    lst[i] = new
                    return
        raise KeyError(old)


@dataclass
class Branch:
    ends: List[str]
    constituents: Tuple[Tuple[str, bool], ...]

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(c for c, _ in self.constituents)


@dataclass(frozen=True)
class ElementaryMove:
    """One move; ``matrix`` gives weights before from weights after.

    Rows follow ``before`` (branches of the graph before the move), columns
    follow ``after``. ``lift`` expresses each after-branch in before-weights.
    """
    kind: str
    branch: str
    new_branch: Optional[str]
    labels: Dict[str, str]
    before: Tuple[str, ...]
    after: Tuple[str, ...]
    matrix: Tuple[Tuple[int, ...], ...]
    lift: Dict[str, Dict[str, int]] = field(default_factory=dict)

    def row(self, branch: str) -> Dict[str, int]:
        r = self.matrix[self.before.index(branch)]
        return {self.after[j]: v for j, v in enumerate(r) if v}

    def lift_measure(self, nu: Mapping[str, Fraction]) -> Dict[str, Fraction]:
        return {b: sum((Fraction(c) * nu[x] for x, c in expr.items()), Fraction(0))
                for b, expr in self.lift.items()}


# ── Graph ────────────────────────────────────────────────────────────────────


class TrackGraph:
    def __init__(self, switches: Dict[str, Switch], branches: Dict[str, Branch], counter: int = 0):
        self.switches = switches
        self.branches = branches
        self.counter = counter

    @classmethod
    def from_track(cls, track) -> "TrackGraph":
        """Smoothed ribbon graph of a suited track (freeway subtrack)."""
        tri = track.base
        switches: Dict[str, Switch] = {}
        branches: Dict[str, Branch] = {}
        for t in tri.triangle_ids:
            for c in range(3):
                if track.is_present(t, c):
                    bid = track.short_id(t, c)
                    branches[bid] = Branch([track.switch_id(t, c), track.switch_id(t, c + 1)], ((bid, True),))
        for arc in tri.arcs:
            if not track.crossed(arc):
                continue
            (t0, i0), (t1, i1) = tri.sides(arc)
            bid = track.long_id(arc)
            branches[bid] = Branch([track.switch_id(t0, i0), track.switch_id(t1, i1)], ((bid, True),))
        for t in tri.triangle_ids:
            for i in range(3):
                shorts = track.side_shorts(t, i)
                if not shorts:
                    continue
                inn = []
                if track.is_present(t, i):
                    inn.append((track.short_id(t, i), 0))
                if track.is_present(t, i - 1):
                    inn.append((track.short_id(t, i - 1), 1))
                arc = tri.triangle_map[t][i]
                end = 0 if tri.sides(arc)[0] == (t, i) else 1
                switches[track.switch_id(t, i)] = Switch(inn, [(track.long_id(arc), end)])
        graph = cls(switches, branches)
        graph.smooth()
        return graph

    def copy(self) -> "TrackGraph":
        return TrackGraph(copy.deepcopy(self.switches), copy.deepcopy(self.branches), self.counter)

    # -- structure ----------------------------------------------------------

    def chain_of(self, orig: str) -> str:
        for bid, br in self.branches.items():
            if orig in br.ids:
                return bid
        raise KeyError(orig)

    def classify(self, bid: str) -> str:
        br = self.branches[bid]
        alone = [len(self._own_list(br.ends[e], (bid, e))) == 1 for e in (0, 1)]
        if all(alone):
            return "large"
        if not any(alone):
            return "small"
        return "mixed"

    def switch_equations(self) -> Tuple[Tuple[str, ...], List[Dict[str, int]]]:
        order = tuple(sorted(self.branches))
        rows = []
        for sw in self.switches.values():
            row: Dict[str, int] = {}
            for b, _ in sw.inn:
                row[b] = row.get(b, 0) + 1
            for b, _ in sw.out:
                row[b] = row.get(b, 0) - 1
            rows.append({b: v for b, v in row.items() if v})
        return order, rows

    def signature(self) -> frozenset:
        out = []
        for sw in self.switches.values():
            a = (tuple(sw.inn), tuple(sw.out))
            b = (tuple(reversed(sw.out)), tuple(reversed(sw.inn)))
            out.append(min(a, b))
        return frozenset(out)

    # -- smoothing ----------------------------------------------------------

    def smooth(self) -> Dict[str, str]:
        """Merge branches across bivalent switches; returns old id -> new id."""
        renamed: Dict[str, str] = {}
        while True:
            target = next((s for s, sw in self.switches.items() if len(sw.inn) == 1 and len(sw.out) == 1
                           and sw.inn[0][0] != sw.out[0][0]), None)
            if target is None:
                break
            sw = self.switches.pop(target)
            (b1, e1), (b2, e2) = sw.inn[0], sw.out[0]
            br1, br2 = self.branches.pop(b1), self.branches.pop(b2)
            part1 = br1.constituents if e1 == 1 else _reverse(br1.constituents)
            part2 = br2.constituents if e2 == 0 else _reverse(br2.constituents)
            x, y = br1.ends[1 - e1], br2.ends[1 - e2]
            new_id = f"~tmp{len(renamed)}~{b1}~{b2}"
            self.branches[new_id] = Branch([x, y], part1 + part2)
            self.switches[x].replace((b1, 1 - e1), (new_id, 0))
            self.switches[y].replace((b2, 1 - e2), (new_id, 1))
            for old in (b1, b2):
                renamed[old] = new_id
        renamed.update(self._canonicalize())
        return _close(renamed)

    def _canonicalize(self) -> Dict[str, str]:
        renamed: Dict[str, str] = {}
        for bid in list(self.branches):
            br = self.branches[bid]
            fwd = br.constituents
            rev = _reverse(fwd)
            key_f = ([c for c, _ in fwd], [not f for _, f in fwd])
            key_r = ([c for c, _ in rev], [not f for _, f in rev])
            flip = key_r < key_f
            cons = rev if flip else fwd
            new_id = "~".join(c for c, _ in cons)
            if not flip and new_id == bid:
                continue
            del self.branches[bid]
            ends = list(reversed(br.ends)) if flip else list(br.ends)
            self.branches[new_id] = Branch(ends, cons)
            for e in (0, 1):
                old_hb = (bid, e)
                new_hb = (new_id, 1 - e if flip else e)
                # both ends may sit on one switch
                sw = self.switches[br.ends[e]]
                for lst in (sw.inn, sw.out):
                    for i, x in enumerate(lst):
                        if x == old_hb:
                            lst[i] = ("\0" + new_hb[0], new_hb[1])
            renamed[bid] = new_id
        for sw in self.switches.values():
            sw.inn = [(b[1:], e) if b.startswith("\0") else (b, e) for b, e in sw.inn]
            sw.out = [(b[1:], e) if b.startswith("\0") else (b, e) for b, e in sw.out]
        return renamed

    # -- traveler frame -----------------------------------------------------

    def _own_list(self, sid: str, hb: HalfBranch) -> List[HalfBranch]:
        sw = self.switches[sid]
        return sw.inn if hb in sw.inn else sw.out

    def _depart(self, sid: str, hb: HalfBranch) -> Tuple[List[HalfBranch], List[HalfBranch]]:
        """(list containing hb, list behind) as seen departing along hb."""
        sw = self.switches[sid]
        if hb in sw.out:
            return list(sw.out), list(sw.inn)
        return list(reversed(sw.inn)), list(reversed(sw.out))

    def _arrive(self, sid: str, hb: HalfBranch) -> Tuple[List[HalfBranch], List[HalfBranch]]:
        """(list containing hb, list ahead) as seen arriving along hb."""
        sw = self.switches[sid]
        if hb in sw.inn:
            return list(sw.inn), list(sw.out)
        return list(reversed(sw.out)), list(reversed(sw.inn))

    # -- moves --------------------------------------------------------------

    def apply(self, kind: str, branch: str) -> Tuple["TrackGraph", ElementaryMove]:
        """Apply a move at ``branch`` (a graph branch id or a constituent id)."""
        if kind not in MOVE_KINDS:
            raise MoveNotApplicable(f"unknown move kind {kind!r}")
        bid = branch if branch in self.branches else self._lookup(branch)
        g = self.copy()
        br = g.branches[bid]
        if br.ends[0] == br.ends[1]:
            raise MoveNotApplicable(f"branch {bid} has both ends on one switch", {"branch": bid})
        cls = g.classify(bid)
        if kind.endswith("split"):
            if cls != "large":
                raise MoveNotApplicable(f"{kind} needs a large branch, {bid} is {cls}", {"branch": bid})
            return g._split(bid, kind, self)
        if kind == "shift":
            if cls != "mixed":
                raise MoveNotApplicable(f"shift needs a mixed branch, {bid} is {cls}", {"branch": bid})
            return g._shift(bid, self)
        if cls != "small":
            raise MoveNotApplicable(f"fold needs a small branch, {bid} is {cls}", {"branch": bid})
        return g._fold(bid, self)

    def _lookup(self, orig: str) -> str:
        try:
            return self.chain_of(orig)
        except KeyError:
            raise MoveNotApplicable(f"no branch {orig!r} in this track", {"branch": orig})

    def _split(self, c: str, kind: str, before: "TrackGraph"):
        x, y = self.branches[c].ends
        _, behind = self._depart(x, (c, 0))
        _, ahead = self._arrive(y, (c, 1))
        if len(behind) != 2 or len(ahead) != 2:
            raise MoveNotApplicable(f"branch {c} is not between two trivalent switches", {"branch": c})
        (a, b), (d, e) = behind, ahead
        new = f"[{c}]s" if kind != "central-split" else None
        t_id, b_id = self._new_switch_id(), self._new_switch_id()
        if kind == "left-split":
            self.switches[t_id] = Switch([a, (new, 1)], [d])
            self.switches[b_id] = Switch([b], [(new, 0), e])
            self.branches[new] = Branch([b_id, t_id], ((new, True),))
            row = _expr((a[0], 1), (new, 1), (e[0], 1))
            lift = {new: _expr((d[0], 1), (a[0], -1))}
        elif kind == "right-split":
            self.switches[t_id] = Switch([a], [d, (new, 0)])
            self.switches[b_id] = Switch([(new, 1), b], [e])
            self.branches[new] = Branch([t_id, b_id], ((new, True),))
            row = _expr((b[0], 1), (new, 1), (d[0], 1))
            lift = {new: _expr((a[0], 1), (d[0], -1))}
        else:
            self.switches[t_id] = Switch([a], [d])
            self.switches[b_id] = Switch([b], [e])
            row = _expr((a[0], 1), (b[0], 1))
            lift = {}
        self._reattach(a, t_id)
        self._reattach(d, t_id)
        self._reattach(b, b_id)
        self._reattach(e, b_id)
        self._drop(c, (x, y))
        labels = {"a": a[0], "b": b[0], "c": c, "d": d[0], "e": e[0]}
        if new:
            labels["c'"] = new
        return self._finish(kind, c, new, labels, before, {c: row}, lift)

    def _shift(self, c: str, before: "TrackGraph"):
        br = self.branches[c]
        alone_end = 0 if len(self._own_list(br.ends[0], (c, 0))) == 1 else 1
        x_sw, y_sw = br.ends[alone_end], br.ends[1 - alone_end]
        _, behind = self._depart(x_sw, (c, alone_end))
        arrival, ahead = self._arrive(y_sw, (c, 1 - alone_end))
        if len(behind) != 2 or len(arrival) != 2 or len(ahead) != 1:
            raise MoveNotApplicable(f"branch {c} has no shift configuration", {"branch": c})
        a, b = behind
        y = ahead[0]
        x_right = arrival[0] == (c, 1 - alone_end)
        xb = arrival[1] if x_right else arrival[0]
        new = f"[{c}]h"
        s1, s2 = self._new_switch_id(), self._new_switch_id()
        if x_right:
            self.switches[s1] = Switch([b, xb], [(new, 0)])
            self.switches[s2] = Switch([a, (new, 1)], [y])
            self._reattach(b, s1)
            self._reattach(a, s2)
            lift = {new: _expr((b[0], 1), (xb[0], 1))}
        else:
            self.switches[s1] = Switch([xb, a], [(new, 0)])
            self.switches[s2] = Switch([(new, 1), b], [y])
            self._reattach(a, s1)
            self._reattach(b, s2)
            lift = {new: _expr((xb[0], 1), (a[0], 1))}
        self._reattach(xb, s1)
        self._reattach(y, s2)
        self.branches[new] = Branch([s1, s2], ((new, True),))
        self._drop(c, (x_sw, y_sw))
        labels = {"a": a[0], "b": b[0], "c": c, "x": xb[0], "y": y[0], "c'": new}
        return self._finish("shift", c, new, labels, before, {c: _expr((a[0], 1), (b[0], 1))}, lift)

    def _fold(self, c: str, before: "TrackGraph"):
        x_sw, y_sw = self.branches[c].ends
        own, behind = self._depart(x_sw, (c, 0))
        arrival, ahead = self._arrive(y_sw, (c, 1))
        if len(own) != 2 or len(behind) != 1 or len(arrival) != 2 or len(ahead) != 1:
            raise MoveNotApplicable(f"branch {c} has no fold configuration", {"branch": c})
        left_at_x = own[0] == (c, 0)
        left_at_y = arrival[0] == (c, 1)
        p_x = own[1] if left_at_x else own[0]
        p_y = arrival[0] if not left_at_y else arrival[1]
        if left_at_x and not left_at_y:
            a, b, d, e = p_y, behind[0], ahead[0], p_x
            row = _expr((a[0], -1), (e[0], -1))
        elif not left_at_x and left_at_y:
            a, d, b, e = behind[0], p_x, p_y, ahead[0]
            row = _expr((b[0], -1), (d[0], -1))
        else:
            raise MoveNotApplicable(f"branch {c} is not the diagonal of a split", {"branch": c})
        new = f"[{c}]f"
        row = _expr(*row.items(), (new, 1))
        s1, s2 = self._new_switch_id(), self._new_switch_id()
        self.switches[s1] = Switch([a, b], [(new, 0)])
        self.switches[s2] = Switch([(new, 1)], [d, e])
        self.branches[new] = Branch([s1, s2], ((new, True),))
        for hb in (a, b):
            self._reattach(hb, s1)
        for hb in (d, e):
            self._reattach(hb, s2)
        self._drop(c, (x_sw, y_sw))
        labels = {"a": a[0], "b": b[0], "c'": c, "d": d[0], "e": e[0], "c": new}
        return self._finish("fold", c, new, labels, before, {c: row},
                            {new: _expr((a[0], 1), (b[0], 1))})

    def _new_switch_id(self) -> str:
        self.counter += 1
        return f"w{self.counter}"

    def _reattach(self, hb: HalfBranch, sid: str) -> None:
        b, e = hb
        self.branches[b].ends[e] = sid

    def _drop(self, bid: str, switch_ids: Iterable[str]) -> None:
        del self.branches[bid]
        for s in switch_ids:
            self.switches.pop(s, None)

    def _finish(self, kind, c, new, labels, before: "TrackGraph", rows, lift):
        renamed = self.smooth()
        after = tuple(sorted(self.branches))
        before_ids = tuple(sorted(before.branches))
        col = {b: i for i, b in enumerate(after)}

        def final(b: str) -> str:
            return renamed.get(b, b)

        matrix = []
        for b in before_ids:
            expr = rows.get(b, {b: 1})
            r = [0] * len(after)
            for x, v in expr.items():
                r[col[final(x)]] += v
            matrix.append(tuple(r))

        lift_final: Dict[str, Dict[str, int]] = {}
        sources: Dict[str, List[str]] = {}
        for b in list(before_ids) + ([new] if new else []):
            if b == c:
                continue
            sources.setdefault(final(b), []).append(b)
        for chain in after:
            members = sources.get(chain, [])
            rep = next((m for m in members if m != new), None)
            if rep is not None:
                lift_final[chain] = {rep: 1}
            elif new in members:
                lift_final[chain] = dict(lift[new])
            else:  # pragma: no cover - every chain contains a surviving branch
                raise MoveNotApplicable(f"cannot lift weights onto {chain}")
        move = ElementaryMove(kind, c, final(new) if new else None,
                              {k: final(v) for k, v in labels.items()},
                              before_ids, after, tuple(matrix), lift_final)
        logger.debug(f"[Moves] {kind} at {c}: {len(before_ids)} -> {len(after)} branches")
        return self, move


# ── Isomorphism and realization ──────────────────────────────────────────────


def anchored_isomorphism(g: TrackGraph, h: TrackGraph, is_internal: Callable[[str], bool]) -> Optional[Dict[str, Tuple[str, bool]]]:
    """Branch map g -> (h branch, reversed) fixing every external constituent.

    Branches carrying external constituents are matched by their external
    constituent sequences; the rest is propagated switch by switch with the
    cyclic left/right order respected (switches may be flipped end for end).
    """
    if len(g.switches) != len(h.switches) or len(g.branches) != len(h.branches):
        return None

    def ext_seq(br: Branch) -> Tuple[Tuple[str, bool], ...]:
        return tuple(c for c in br.constituents if not is_internal(c[0]))

    h_index: Dict[str, str] = {}
    for hid, br in h.branches.items():
        for c, _ in ext_seq(br):
            h_index[c] = hid

    bmap: Dict[str, Tuple[str, bool]] = {}
    smap: Dict[str, str] = {}
    used_h: Set[str] = set()
    queue: deque = deque()

    def bind_switch(sg: str, sh: str) -> bool:
        if sg in smap:
            return smap[sg] == sh
        if sh in smap.values():
            return False
        smap[sg] = sh
        queue.append(sg)
        return True

    for gid, br in g.branches.items():
        seq = ext_seq(br)
        if not seq:
            continue
        hid = h_index.get(seq[0][0])
        if hid is None:
            return None
        hseq = ext_seq(h.branches[hid])
        if hseq == seq:
            rev = False
        elif _reverse(hseq) == seq:
            rev = True
        else:
            return None
        bmap[gid] = (hid, rev)
        used_h.add(hid)
        hends = h.branches[hid].ends
        for e in (0, 1):
            if not bind_switch(br.ends[e], hends[1 - e if rev else e]):
                return None

    while queue:
        sg = queue.popleft()
        sh = smap[sg]
        swg, swh = g.switches[sg], h.switches[sh]
        anchor = next(((b, e) for b, e in swg.inn + swg.out
                       if b in bmap and g.branches[b].ends[e] == sg), None)
        if anchor is None:  # pragma: no cover - switches are queued through a mapped branch
            return None
        hb, rev = bmap[anchor[0]]
        he = 1 - anchor[1] if rev else anchor[1]
        side_g, pos_g = swg.side_of(anchor)
        try:
            side_h, pos_h = swh.side_of((hb, he))
        except KeyError:
            return None
        aligned = side_g == side_h
        if aligned:
            pairs = [(swg.inn, swh.inn, False), (swg.out, swh.out, False)]
        else:
            pairs = [(swg.inn, swh.out, True), (swg.out, swh.inn, True)]
        for lg, lh, flipped in pairs:
            if len(lg) != len(lh):
                return None
            for i, (gb, ge) in enumerate(lg):
                hbb, hee = lh[len(lh) - 1 - i] if flipped else lh[i]
                rel = ge != hee
                if gb in bmap:
                    if bmap[gb] != (hbb, rel):
                        return None
                else:
                    if hbb in used_h:
                        return None
                    bmap[gb] = (hbb, rel)
                    used_h.add(hbb)
                    gends, hends = g.branches[gb].ends, h.branches[hbb].ends
                    for e in (0, 1):
                        if not bind_switch(gends[e], hends[1 - e if rel else e]):
                            return None
    if len(bmap) != len(g.branches) or len(smap) != len(g.switches):
        return None
    return bmap


@dataclass(frozen=True)
class Realization:
    moves: Tuple[ElementaryMove, ...]
    branch_map: Dict[str, Tuple[str, bool]]
    matrix: Tuple[Tuple[int, ...], ...]
    before: Tuple[str, ...]
    after: Tuple[str, ...]


def compose_moves(moves: Sequence[ElementaryMove], start: Sequence[str]) -> Tuple[Tuple[str, ...], Tuple[str, ...], List[List[int]]]:
    rows = tuple(sorted(start))
    current = [[int(i == j) for j in range(len(rows))] for i in range(len(rows))]
    cols = rows
    for mv in moves:
        idx = {b: i for i, b in enumerate(mv.before)}
        nxt = []
        for r in current:
            acc = [0] * len(mv.after)
            for j, v in enumerate(r):
                if v:
                    src = mv.matrix[idx[cols[j]]]
                    for t, w in enumerate(src):
                        acc[t] += v * w
            nxt.append(acc)
        current = nxt
        cols = mv.after
    return rows, cols, current


def search_realization(start: TrackGraph, target: TrackGraph, is_internal: Callable[[str], bool],
                       start_measure: Mapping[str, Fraction], target_measure: Mapping[str, Fraction],
                       max_depth: int = 4) -> Optional[Realization]:
    """Breadth-first search for moves at internal branches turning start into target.

    Splits are steered by the measure (left when a < d, right when a > d);
    sequences that make a weight negative are discarded. A hit must match
    the target structurally and carry the target measure.
    """
    frontier = [(start, (), dict(start_measure))]
    seen = {start.signature()}
    for depth in range(max_depth + 1):
        next_frontier = []
        for graph, moves, nu in frontier:
            bmap = anchored_isomorphism(graph, target, is_internal)
            if bmap is not None and all(nu[g] == target_measure[hb] for g, (hb, _) in bmap.items()):
                rows, cols, mat = compose_moves(moves, start.branches)
                return Realization(tuple(moves), bmap, tuple(tuple(r) for r in mat), rows, cols)
            if depth == max_depth:
                continue
            for bid in sorted(graph.branches):
                br = graph.branches[bid]
                if not all(is_internal(c) for c in br.ids) or br.ends[0] == br.ends[1]:
                    continue
                for kind in _candidate_kinds(graph, bid, nu):
                    try:
                        g2, mv = graph.apply(kind, bid)
                    except MoveNotApplicable:
                        continue
                    nu2 = mv.lift_measure(nu)
                    if any(v < 0 for v in nu2.values()):
                        continue
                    sig = g2.signature()
                    if sig in seen:
                        continue
                    seen.add(sig)
                    next_frontier.append((g2, moves + (mv,), nu2))
        frontier = next_frontier
        if not frontier:
            break
    return None


def _candidate_kinds(graph: TrackGraph, bid: str, nu: Mapping[str, Fraction]) -> List[str]:
    cls = graph.classify(bid)
    if cls == "mixed":
        return ["shift"]
    if cls == "small":
        return ["fold"]
    x, y = graph.branches[bid].ends
    _, behind = graph._depart(x, (bid, 0))
    _, ahead = graph._arrive(y, (bid, 1))
    if len(behind) != 2 or len(ahead) != 2:
        return []
    a, d = nu[behind[0][0]], nu[ahead[0][0]]
    if a < d:
        return ["left-split"]
    if a > d:
        return ["right-split"]
    return []


# ── Internal helpers ─────────────────────────────────────────────────────────


def _reverse(cons: Sequence[Tuple[str, bool]]) -> Tuple[Tuple[str, bool], ...]:
    return tuple((c, not f) for c, f in reversed(cons))


def _expr(*terms: Tuple[str, int]) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for b, v in terms:
        out[b] = out.get(b, 0) + v
    return {b: v for b, v in out.items() if v}


def _close(renamed: Dict[str, str]) -> Dict[str, str]:
    out = {}
    for k in renamed:
        v = renamed[k]
        seen = {k}
        while v in renamed and v not in seen:
            seen.add(v)
            v = renamed[v]
        out[k] = v
    return out
