"""
TropTrack error types.

Every error carries a stable ``code`` and a ``details`` dict so the CLI can
emit a machine-readable error document without inspecting messages.
"""
from typing import Any, Dict, Optional


class TropTrackError(Exception):
    code = "troptrack_error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.code, "message": self.message, "details": self.details}


# ── Surface / triangulation ──────────────────────────────────────────────────


class SurfaceExcluded(TropTrackError, ValueError):
    """2g-2+h <= 0, or a sphere with at most three punctures."""
    code = "surface_excluded"


class ArcCountMismatch(TropTrackError, ValueError):
    code = "arc_count_mismatch"


class GluingInvalid(TropTrackError, ValueError):
    code = "gluing_invalid"


class SelfFolded(TropTrackError, ValueError):
    code = "self_folded"


class FlipBlocked(TropTrackError, ValueError):
    code = "flip_blocked"


class ChartMismatch(TropTrackError, ValueError):
    code = "chart_mismatch"


# ── Tracks ───────────────────────────────────────────────────────────────────


class TrackInvalid(TropTrackError, ValueError):
    code = "track_invalid"


class MoveNotApplicable(TropTrackError, ValueError):
    code = "move_not_applicable"


class NotCarried(TropTrackError, RuntimeError):
    code = "not_carried"


# ── Loops / stability ────────────────────────────────────────────────────────


class LoopInvalid(TropTrackError, ValueError):
    code = "loop_invalid"


class NotStable(TropTrackError, RuntimeError):
    code = "not_stable"


# ── Infrastructure ───────────────────────────────────────────────────────────


class LPError(TropTrackError, RuntimeError):
    code = "lp_error"


class SchemaError(TropTrackError, ValueError):
    code = "schema_error"
