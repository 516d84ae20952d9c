"""
troptrack command line.

Every command reads one workspace document (schema v1: surface,
triangulation and optional named points, tracks and loops) and prints a
canonical JSON report on stdout. Module errors print an error document on
stderr and exit 1; argument errors exit 2.

Usage:
    troptrack surface build s04.json
    troptrack potential eval s04.json --coords 1=1,2=0,3=0,4=0,5=0,6=0
    troptrack tracks enumerate s04.json --complete
    troptrack loop entropy torus_lr.json --loop LR
    troptrack fan export s04.json --format dot
"""
import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from troptrack.config import get_settings
from troptrack.data.workspace_store import CacheStore
from troptrack.errors import ChartMismatch, LoopInvalid, NotStable, SchemaError, TrackInvalid, TropTrackError
from troptrack.modules import potential, stability, surface, tracks, tropical
from troptrack.utils.env_guardian import env_guardian
from troptrack.utils.serialization import (
    Workspace,
    dumps,
    load_document,
    parse_rational,
    point_to_doc,
    track_to_doc,
    workspace_from_doc,
)

logger = logging.getLogger(__name__)


# ── Input helpers ────────────────────────────────────────────────────────────


def _workspace(args) -> Workspace:
    return workspace_from_doc(load_document(args.file), Path(args.file))


def _parse_coords(text: str) -> Dict[str, Fraction]:
    coords = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise SchemaError(f"coordinate {item!r} is not of the form arc=p/q")
        arc, value = item.split("=", 1)
        coords[arc.strip()] = parse_rational(value)
    return coords


def _point(ws: Workspace, args, kind: str) -> tropical.TropicalPoint:
    tri = ws.triangulation
    if getattr(args, "point", None):
        if args.point not in ws.points:
            raise SchemaError(f"no point named {args.point!r}", {"points": sorted(ws.points)})
        p = ws.points[args.point]
        if p.kind != kind:
            raise ChartMismatch(f"point {args.point!r} is a {p.kind}-point, {kind} expected")
        return p
    if getattr(args, "coords", None):
        return tropical.TropicalPoint.from_mapping(tri.chart_id, kind, tri.arcs, _parse_coords(args.coords))
    return tropical.TropicalPoint.zero(tri.chart_id, kind, tri.arcs)


def _track(ws: Workspace, ref: Optional[str]) -> tracks.TrainTrack:
    """A named workspace track, a track key, or #i into the complete tracks."""
    if ref is None:
        if len(ws.tracks) == 1:
            return next(iter(ws.tracks.values()))
        raise TrackInvalid("name a track with --track", {"tracks": sorted(ws.tracks)})
    if ref in ws.tracks:
        return ws.tracks[ref]
    complete = tracks.enumerate_complete_tracks(ws.triangulation)
    if ref.startswith("#") and ref[1:].isdigit() and int(ref[1:]) < len(complete):
        return complete[int(ref[1:])]
    for t in complete:
        if t.key == ref:
            return t
    raise TrackInvalid(f"unknown track {ref!r}", {"tracks": sorted(ws.tracks)})


def _loop(ws: Workspace, ref: Optional[str]) -> surface.FlipWord:
    if ref is None:
        if len(ws.loops) == 1:
            return next(iter(ws.loops.values()))
        raise LoopInvalid("name a loop with --loop", {"loops": sorted(ws.loops)})
    if ref not in ws.loops:
        raise LoopInvalid(f"no loop named {ref!r}", {"loops": sorted(ws.loops)})
    return ws.loops[ref]


def _arc(ws: Workspace, value: str):
    return surface.coerce_arc(value, ws.triangulation.arcs)


def _cached(args, command: str, inputs: dict, compute: Callable[[], object]) -> str:
    if args.no_cache:
        return dumps(compute())
    store = CacheStore.from_settings()
    return store.get_or_compute(command, inputs, lambda: dumps(compute()))


def _fmt_matrix(rows) -> List[List[str]]:
    return [[f"{Fraction(x).numerator}/{Fraction(x).denominator}" for x in r] for r in rows]


# ── Commands ─────────────────────────────────────────────────────────────────


def cmd_surface_build(args) -> object:
    ws = _workspace(args)
    tri = ws.triangulation
    return {
        "chart": tri.chart_id,
        "surface": {"genus": tri.surface.genus, "punctures": list(tri.surface.punctures),
                    "euler_characteristic": tri.surface.euler_characteristic,
                    "arcs": tri.surface.arc_count, "measure_dimension": tri.surface.measure_dimension},
        "triangulation": tri.to_spec()["triangulation"],
        "endpoints": {str(a): list(tri.endpoints(a)) for a in tri.arcs},
        "flippable": [str(a) for a in surface.iter_flippable(tri)],
    }


def cmd_flip(args) -> object:
    ws = _workspace(args)
    tri = ws.triangulation
    for k in args.arc:
        tri = surface.flip(tri, _arc(ws, k))
    doc = tri.to_spec()
    doc["chart"] = tri.chart_id
    return doc


def cmd_bmatrix(args) -> object:
    ws = _workspace(args)
    tri = ws.triangulation
    B = surface.exchange_matrix(tri)
    for k in args.mutate or []:
        B = tropical.mutate_exchange(B, _arc(ws, k))
    return {"chart": tri.chart_id, "arcs": [str(a) for a in B.arcs], "matrix": B.to_lists(),
            "mutations": list(args.mutate or [])}


def cmd_potential_eval(args) -> object:
    ws = _workspace(args)
    tri = ws.triangulation
    a = _point(ws, args, "A")
    value = potential.tropical_potential(tri, a)
    terms = {}
    for p, forms in potential.potential_terms(tri).items():
        rendered = sorted(potential.format_form(tri, [Fraction(f.get(arc, 0)) for arc in tri.arcs]) for f in forms)
        terms[p] = "min(" + ", ".join(rendered) + ")" if len(rendered) > 1 else rendered[0]
    dom = potential.linearity_domain(tri, a)
    return {
        "chart": tri.chart_id,
        "point": point_to_doc(a),
        "w": value.values,
        "terms": terms,
        "argmins": {p: [f"{t}:{c}" for t, c in keys] for p, keys in value.argmins.items()},
        "boundary": dom.boundary,
        "in_V": all(v == 0 for v in value.values.values()),
    }


def cmd_potential_domains(args) -> object:
    ws = _workspace(args)
    tri = ws.triangulation
    domains = potential.enumerate_domains(tri, restrict_to_V=args.V)
    return {
        "chart": tri.chart_id,
        "restrict_to_V": args.V,
        "count": len(domains),
        "domains": [{
            "choice": {p: f"{t}:{c}" for p, (t, c) in d.choice},
            "interior_point": list(d.interior_point),
            "inequalities": _fmt_matrix(d.cone.inequalities),
        } for d in domains],
    }


def cmd_tracks_enumerate(args) -> str:
    ws = _workspace(args)
    tri = ws.triangulation

    def compute():
        found = tracks.enumerate_complete_tracks(tri) if args.complete else tracks.enumerate_suited_tracks(tri)
        return {"chart": tri.chart_id, "complete": args.complete, "count": len(found),
                "tracks": [track_to_doc(t) | {"key": t.key, "branches": list(t.branches)} for t in found]}

    return _cached(args, "tracks enumerate", {"triangulation": tri.to_spec(), "complete": args.complete}, compute)


def cmd_tracks_cone(args) -> object:
    ws = _workspace(args)
    track = _track(ws, args.track)
    out = {"track": track.key, "cone": tracks.cone(track).to_dict(),
           "regions": [r.to_dict() for r in tracks.complementary_regions(track)],
           "complete": tracks.is_complete(track)}
    if out["complete"]:
        chart = tracks.chart_map(track)
        out["chart"] = {"rows": list(chart.rows), "matrix": _fmt_matrix(chart.matrix)}
        out["domain"] = {"inequalities": _fmt_matrix(tracks.track_domain(track).inequalities)}
    return out


def cmd_tracks_move(args) -> object:
    ws = _workspace(args)
    track = _track(ws, args.track)
    graph, move = tracks.apply_move(track, args.kind, args.branch)
    return {"track": track.key, "kind": move.kind, "branch": move.branch, "new_branch": move.new_branch,
            "before": list(move.before), "after": list(move.after), "matrix": _fmt_matrix(move.matrix),
            "labels": move.labels, "switches": len(graph.switches)}


def cmd_tracks_lambda(args) -> object:
    ws = _workspace(args)
    tri = ws.triangulation
    k = _arc(ws, args.arc)
    if args.track is None:
        comps = tracks.lambda_components(tri, k)
        return {"arc": str(k), "components": [{
            "case": case, "before": [t.key for t in ls], "after": [t.key for t in rs],
            "cone_identity": tracks.verify_cone_identity(tri, k, ls, rs),
        } for ls, rs, case in comps]}
    track = _track(ws, args.track)
    return {"arc": str(k), "track": track.key, "cell": list(tracks.lambda_table_cell(track, k)),
            "successors": [s.to_dict() for s in tracks.lambda_relation(track, k)]}


def cmd_loop_check(args) -> object:
    ws = _workspace(args)
    tri = ws.triangulation
    word = _loop(ws, args.loop)
    B = surface.exchange_matrix(tri)
    mutated = B
    for k in word.flips:
        mutated = tropical.mutate_exchange(mutated, k)
    return {"loop": surface.is_loop(word, tri), "flips": [str(k) for k in word.flips],
            "sigma": {str(a): str(b) for a, b in word.sigma}, "power": word.power,
            "start": B.to_lists(), "end": surface.permute_exchange(mutated, word.sigma_map).to_lists()}


def cmd_loop_signs(args) -> object:
    ws = _workspace(args)
    loop = stability.MutationLoop.create(ws.triangulation, _loop(ws, args.loop))
    x = _point(ws, args, "X")
    words = []
    orbit = [x]
    for _ in range(args.iterations):
        nxt, signs = loop.act(orbit[-1])
        orbit.append(nxt)
        words.append(str(signs))
    return {"start": point_to_doc(x), "signs": words, "orbit": [list(p.values) for p in orbit]}


def _stability_report(args, ws: Workspace) -> Tuple[stability.MutationLoop, stability.StabilityReport]:
    loop = stability.MutationLoop.create(ws.triangulation, _loop(ws, args.loop))
    return loop, stability.detect_sign_stability(loop, max_iter=args.max_iter, window=args.window,
                                                  power=args.power)


def cmd_loop_stability(args) -> str:
    ws = _workspace(args)

    def compute():
        loop, report = _stability_report(args, ws)
        out = report.to_dict()
        if report.verdict == stability.STABLE and args.bounded:
            out["bounded_check"] = stability.check_bounded_stability(loop.power(report.power) if report.power > 1
                                                                     else loop, report, args.bounded).to_dict()
        return out

    inputs = {"triangulation": ws.triangulation.to_spec(), "loop": _loop(ws, args.loop).to_steps(ws.triangulation.arcs),
              "power": args.power, "max_iter": args.max_iter, "window": args.window, "bounded": args.bounded}
    return _cached(args, "loop stability", inputs, compute)


def cmd_loop_entropy(args) -> object:
    ws = _workspace(args)
    loop, report = _stability_report(args, ws)
    value = stability.entropy(loop, report)
    out = {"entropy": f"{value:.10g}", "verdict": report.verdict, "power": report.power}
    if report.verdict != stability.STABLE and loop.h:
        out["order"] = stability.loop_order(loop)
    if report.spectral_radius is not None:
        out["spectral_radius"] = report.spectral_radius.to_dict()
    return out


def cmd_loop_invariant_track(args) -> object:
    ws = _workspace(args)
    loop = stability.MutationLoop.create(ws.triangulation, _loop(ws, args.loop))
    found = stability.find_invariant_track(loop, largest=args.largest)
    if found is None:
        raise NotStable("no complete track is carried onto itself by this loop")
    out = found.to_dict()
    if args.probe:
        report = stability.detect_sign_stability(loop)
        if report.verdict == stability.STABLE and report.power == 1:
            out["probe"] = stability.conjecture_probe(loop, found, stability.stable_cone(loop, report.stable_sign))
    return out


def _fan(tri) -> dict:
    complete = tracks.enumerate_complete_tracks(tri)
    return {"chart": tri.chart_id,
            "nodes": [{"key": t.key, "dim": tracks.cone(t).dim} for t in complete],
            "edges": [list(e) for e in tracks.fan_adjacency(tri)]}


def _dot(fan: dict) -> str:
    lines = [f'graph "{fan["chart"]}" {{']
    for node in fan["nodes"]:
        lines.append(f'  "{node["key"]}" [label="{node["key"]}\\ndim {node["dim"]}"];')
    for a, b in fan["edges"]:
        lines.append(f'  "{a}" -- "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_fan_export(args) -> str:
    ws = _workspace(args)
    tri = ws.triangulation
    text = _cached(args, "fan export", {"triangulation": tri.to_spec()}, lambda: _fan(tri))
    if args.format == "dot":
        return _dot(json.loads(text))
    return text


# ── Parser ───────────────────────────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="troptrack", description="Train tracks and tropical cluster coordinates")
    parser.add_argument("--no-cache", action="store_true", help="Skip the workspace report cache")
    parser.add_argument("-o", "--output", help="Also write the report to this file")
    sub = parser.add_subparsers(dest="group", required=True)

    def file_arg(p):
        p.add_argument("file", help="Workspace JSON (schema v1)")
        return p

    def point_args(p):
        p.add_argument("--point", help="Named point of the workspace")
        p.add_argument("--coords", help="Inline coordinates, e.g. 1=1/2,2=0,...")

    surf = sub.add_parser("surface").add_subparsers(dest="command", required=True)
    file_arg(surf.add_parser("build", help="Validate a triangulation")).set_defaults(func=cmd_surface_build)

    p = file_arg(sub.add_parser("flip", help="Flip arcs in order"))
    p.add_argument("--arc", action="append", required=True)
    p.set_defaults(func=cmd_flip)

    p = file_arg(sub.add_parser("bmatrix", help="Exchange matrix, optionally mutated"))
    p.add_argument("--mutate", action="append")
    p.set_defaults(func=cmd_bmatrix)

    pot = sub.add_parser("potential").add_subparsers(dest="command", required=True)
    p = file_arg(pot.add_parser("eval", help="Evaluate the tropical potential"))
    point_args(p)
    p.set_defaults(func=cmd_potential_eval)
    p = file_arg(pot.add_parser("domains", help="Linearity domains"))
    p.add_argument("--V", action="store_true", help="Restrict to w = 0")
    p.set_defaults(func=cmd_potential_domains)

    tr = sub.add_parser("tracks").add_subparsers(dest="command", required=True)
    p = file_arg(tr.add_parser("enumerate", help="Suited or complete tracks"))
    p.add_argument("--complete", action="store_true")
    p.set_defaults(func=cmd_tracks_enumerate)
    p = file_arg(tr.add_parser("cone", help="Measure cone and chart of a track"))
    p.add_argument("--track")
    p.set_defaults(func=cmd_tracks_cone)
    p = file_arg(tr.add_parser("move", help="Apply one elementary move"))
    p.add_argument("--track")
    p.add_argument("--kind", required=True, choices=["left-split", "right-split", "central-split", "shift", "fold"])
    p.add_argument("--branch", required=True)
    p.set_defaults(func=cmd_tracks_move)
    p = file_arg(tr.add_parser("lambda", help="λ-relation under a flip"))
    p.add_argument("--track")
    p.add_argument("--arc", required=True)
    p.set_defaults(func=cmd_tracks_lambda)

    lp = sub.add_parser("loop").add_subparsers(dest="command", required=True)
    p = file_arg(lp.add_parser("check", help="Is the word a mutation loop"))
    p.add_argument("--loop")
    p.set_defaults(func=cmd_loop_check)
    p = file_arg(lp.add_parser("signs", help="Sign words along an orbit"))
    p.add_argument("--loop")
    point_args(p)
    p.add_argument("-n", "--iterations", type=int, default=10)
    p.set_defaults(func=cmd_loop_signs)
    for name, func, helptext in (("stability", cmd_loop_stability, "Sign stability report"),
                                 ("entropy", cmd_loop_entropy, "Entropy of a sign-stable loop")):
        p = file_arg(lp.add_parser(name, help=helptext))
        p.add_argument("--loop")
        p.add_argument("--max-iter", type=int)
        p.add_argument("--window", type=int)
        p.add_argument("--power", type=int)
        if name == "stability":
            p.add_argument("--bounded", type=int, metavar="N_MAX", help="Also run the bounded check")
        p.set_defaults(func=func)
    p = file_arg(lp.add_parser("invariant-track", help="Complete track carried onto itself"))
    p.add_argument("--loop")
    p.add_argument("--probe", action="store_true", help="Test V(τ) against the stable cone")
    p.add_argument("--largest", action="store_true", help="Search every complete track for the largest spectral radius")
    p.set_defaults(func=cmd_loop_invariant_track)

    fan = sub.add_parser("fan").add_subparsers(dest="command", required=True)
    p = file_arg(fan.add_parser("export", help="Adjacency of complete-track cones"))
    p.add_argument("--format", choices=["json", "dot"], default="json")
    p.set_defaults(func=cmd_fan_export)
    return parser


# ── Entry point ──────────────────────────────────────────────────────────────


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        result = args.func(args)
        text = result if isinstance(result, str) else dumps(result)
    except TropTrackError as e:
        logger.error(f"[CLI] {e.code}: {e.message}")
        sys.stderr.write(dumps(e.to_dict()))
        # unreadable input is a usage error
        return 2 if isinstance(e.__cause__, json.JSONDecodeError) else 1
    sys.stdout.write(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text)
    return 0


def main() -> None:
    settings = get_settings()
    logging.basicConfig(level=getattr(logging, settings.log_level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    env_guardian.validate()
    sys.exit(run())


if __name__ == "__main__":
    main()
