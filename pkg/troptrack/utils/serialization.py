"""
JSON schema v1 for TropTrack documents.

Documents:
  surface        {genus, punctures: [ids]}
  triangulation  {arcs, triangles: [[{arc, flip?} x 3]], labels?, triangle_ids?, corners?}
  point          {chart?, kind: "A" | "X", coords: {arc: "p/q"}}
  track          {base?, triangles: {tid: {type, absent: [corner]}}}
  loop           {base?, word: [{flip: k} | {perm: [...]}], power?}

A workspace file bundles one surface and triangulation with named points,
tracks and loops. Rationals travel as "p/q" strings; every emitted
document goes through ``dumps`` so identical inputs give identical bytes.

Usage:
    from troptrack.utils.serialization import load_workspace, dumps

    ws = load_workspace("troptrack/data/fixtures/s04.json")
    print(dumps({"w": ws.points["origin"].values}))
"""
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from troptrack.errors import ChartMismatch, SchemaError, TrackInvalid
from troptrack.modules.surface import FlipWord, LabeledTriangulation, build_triangulation
from troptrack.modules.tracks import TrainTrack
from troptrack.modules.tropical import TropicalPoint

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

ArcRefValue = Union[int, str]


# ── Rationals ────────────────────────────────────────────────────────────────


def format_rational(value) -> str:
    f = Fraction(value)
    return f"{f.numerator}/{f.denominator}"


def parse_rational(value) -> Fraction:
    if isinstance(value, bool):
        raise SchemaError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise SchemaError(f"not a rational: {value!r}", {"value": repr(value)})


def to_jsonable(obj: Any) -> Any:
    """Fractions -> "p/q", tuples -> lists, objects with to_dict() -> dicts."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.10g}")
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [to_jsonable(v) for v in obj]
        return sorted(items, key=json.dumps) if isinstance(obj, (set, frozenset)) else items
    return str(obj)


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


# ── Schema models ────────────────────────────────────────────────────────────


class _Doc(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SurfaceDoc(_Doc):
    genus: int = Field(ge=0)
    punctures: List[str] = Field(min_length=1)


class SideDoc(_Doc):
    arc: ArcRefValue
    flip: Optional[bool] = None


class TriangulationDoc(_Doc):
    arcs: List[ArcRefValue]
    triangles: List[List[Union[SideDoc, ArcRefValue]]]
    labels: Dict[str, str] = Field(default_factory=dict)
    triangle_ids: Optional[List[str]] = None
    corners: Optional[List[List[str]]] = None

    @field_validator("triangles")
    @classmethod
    def _three_sides(cls, v):
        for tri in v:
            if len(tri) != 3:
                raise ValueError("every triangle lists exactly three sides")
        return v


class PointDoc(_Doc):
    chart: Optional[str] = None
    kind: Literal["A", "X"]
    coords: Dict[str, Union[str, int]]

    @field_validator("coords")
    @classmethod
    def _rationals(cls, v):
        for key, raw in v.items():
            try:
                parse_rational(raw)
            except SchemaError:
                raise ValueError(f"coordinate {key} is not a rational: {raw!r}")
        return v


class TrackTriangleDoc(_Doc):
    type: Literal["I", "II", "III"]
    absent: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _type_matches(self):
        expected = {"III": 0, "II": 1, "I": 2}[self.type]
        if len(set(self.absent)) != expected:
            raise ValueError(f"type {self.type} needs {expected} absent corners")
        if any(c not in (0, 1, 2) for c in self.absent):
            raise ValueError("corners are 0, 1 or 2")
        return self


class TrackDoc(_Doc):
    base: Optional[str] = None
    triangles: Dict[str, TrackTriangleDoc]


class WordStepDoc(_Doc):
    flip: Optional[ArcRefValue] = None
    perm: Optional[List[ArcRefValue]] = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.flip is None) == (self.perm is None):
            raise ValueError("a word step is either {flip} or {perm}")
        return self


class LoopDoc(_Doc):
    base: Optional[str] = None
    word: List[WordStepDoc]
    power: int = Field(default=1, ge=1)


class WorkspaceDoc(_Doc):
    schema_version: int = SCHEMA_VERSION
    name: Optional[str] = None
    description: Optional[str] = None
    surface: SurfaceDoc
    triangulation: TriangulationDoc
    points: Dict[str, PointDoc] = Field(default_factory=dict)
    tracks: Dict[str, TrackDoc] = Field(default_factory=dict)
    loops: Dict[str, LoopDoc] = Field(default_factory=dict)


def _validate(model, data: Any, what: str):
    try:
        return model.model_validate(data)
    except ValidationError as e:
        errors = [{"loc": ".".join(map(str, err["loc"])), "msg": err["msg"]} for err in e.errors()]
        raise SchemaError(f"{what} does not match schema v{SCHEMA_VERSION}", {"errors": errors})


# ── Documents <-> domain objects ─────────────────────────────────────────────


@dataclass
class Workspace:
    name: str
    triangulation: LabeledTriangulation
    points: Dict[str, TropicalPoint]
    tracks: Dict[str, TrainTrack]
    loops: Dict[str, FlipWord]
    source: Optional[Path] = None


def triangulation_from_doc(data: dict) -> LabeledTriangulation:
    doc = _validate(WorkspaceDoc, {"surface": data.get("surface"), "triangulation": data.get("triangulation")},
                    "triangulation document")
    return build_triangulation(doc.model_dump(exclude_none=True))


def _check_chart(ref: Optional[str], tri: LabeledTriangulation, names: tuple) -> None:
    if ref is not None and ref != tri.chart_id and ref not in names:
        raise ChartMismatch(f"document refers to chart {ref!r}, loaded chart is {tri.chart_id}",
                            {"chart": ref, "loaded": tri.chart_id})


def point_from_doc(data: dict, tri: LabeledTriangulation, names: tuple = ("base",)) -> TropicalPoint:
    doc = _validate(PointDoc, data, "point")
    _check_chart(doc.chart, tri, names)
    coords = {k: parse_rational(v) for k, v in doc.coords.items()}
    return TropicalPoint.from_mapping(tri.chart_id, doc.kind, tri.arcs, coords)


def point_to_doc(point: TropicalPoint) -> dict:
    return {"chart": point.chart, "kind": point.kind,
            "coords": {str(a): format_rational(v) for a, v in zip(point.arcs, point.values)}}


def track_from_doc(data: dict, tri: LabeledTriangulation, names: tuple = ("base",)) -> TrainTrack:
    doc = _validate(TrackDoc, data, "track")
    _check_chart(doc.base, tri, names)
    missing = set(tri.triangle_ids) - set(doc.triangles)
    if missing:
        raise TrackInvalid(f"track omits triangles {sorted(missing)}", {"triangles": sorted(missing)})
    return TrainTrack.from_absent(tri, {t: d.absent for t, d in doc.triangles.items()})


def track_to_doc(track: TrainTrack) -> dict:
    return {"base": track.base.chart_id,
            "triangles": {t: {"type": track.triangle_type(t), "absent": list(c)} for t, c in track.absent}}


def loop_from_doc(data: dict, tri: LabeledTriangulation, names: tuple = ("base",)) -> FlipWord:
    doc = _validate(LoopDoc, data, "loop")
    _check_chart(doc.base, tri, names)
    steps = [s.model_dump(exclude_none=True) for s in doc.word]
    return FlipWord.from_steps(steps, tri.arcs, doc.power)


def loop_to_doc(word: FlipWord, tri: LabeledTriangulation) -> dict:
    return {"base": tri.chart_id, "word": word.to_steps(tri.arcs), "power": word.power}


def load_document(path) -> dict:
    p = Path(path)
    try:
        with open(p, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise SchemaError(f"no such file: {p}", {"path": str(p)})
    except json.JSONDecodeError as e:
        raise SchemaError(f"{p} is not valid JSON: {e}", {"path": str(p)}) from e


def workspace_from_doc(data: dict, source: Optional[Path] = None) -> Workspace:
    doc = _validate(WorkspaceDoc, data, "workspace")
    if doc.schema_version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {doc.schema_version}")
    tri = build_triangulation(doc.model_dump(include={"surface", "triangulation"}, exclude_none=True))
    names = ("base",) + ((doc.name,) if doc.name else ())
    raw = data
    points = {k: point_from_doc(v, tri, names) for k, v in raw.get("points", {}).items()}
    tracks = {k: track_from_doc(v, tri, names) for k, v in raw.get("tracks", {}).items()}
    loops = {k: loop_from_doc(v, tri, names) for k, v in raw.get("loops", {}).items()}
    logger.debug(f"[Serialization] workspace {doc.name or source}: {len(points)} points, "
                 f"{len(tracks)} tracks, {len(loops)} loops")
    return Workspace(doc.name or (source.stem if source else "workspace"), tri, points, tracks, loops, source)


def load_workspace(path) -> Workspace:
    p = Path(path)
    return workspace_from_doc(load_document(p), p)
