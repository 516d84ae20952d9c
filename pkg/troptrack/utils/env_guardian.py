"""
EnvGuardian — validation of TROPTRACK_* settings at CLI startup.
"""
import logging
import os
from pathlib import Path

from troptrack.config import DEFAULTS

logger = logging.getLogger(__name__)

INTEGER_KEYS = {
    "TROPTRACK_CACHE_MAX_MB":     "workspace cache prune threshold (MB)",
    "TROPTRACK_STABILITY_WINDOW": "sign stability window K",
    "TROPTRACK_MAX_ITER":         "stability iteration budget",
    "TROPTRACK_MAX_POWER":        "loop powers tried automatically",
    "TROPTRACK_WORKERS":          "orbit worker threads",
}

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class EnvGuardian:
    def validate(self) -> list[str]:
        """Check every TROPTRACK_* setting. Logs status for each key. Returns list of invalid keys."""
        invalid = []
        lines = []
        for key, description in INTEGER_KEYS.items():
            raw = os.getenv(key)
            if raw is None:
                lines.append(f"  · {key}: default {DEFAULTS[key]}  ({description})")
                continue
            try:
                ok = int(raw) > 0
            except ValueError:
                ok = False
            if ok:
                lines.append(f"  ✅ {key}: {raw}  ({description})")
            else:
                lines.append(f"  ❌ {key}: {raw!r} is not a positive integer  ({description})")
                invalid.append(key)

        level = os.getenv("TROPTRACK_LOG_LEVEL")
        if level is not None and level.upper() not in LOG_LEVELS:
            lines.append(f"  ❌ TROPTRACK_LOG_LEVEL: {level!r} is not a log level")
            invalid.append("TROPTRACK_LOG_LEVEL")

        cache_dir = Path(os.getenv("TROPTRACK_CACHE_DIR", DEFAULTS["TROPTRACK_CACHE_DIR"])).expanduser()
        if cache_dir.exists() and not cache_dir.is_dir():
            lines.append(f"  ❌ TROPTRACK_CACHE_DIR: {cache_dir} exists and is not a directory")
            invalid.append("TROPTRACK_CACHE_DIR")

        logger.debug("EnvGuardian settings status:\n" + "\n".join(lines))
        if invalid:
            logger.warning(f"EnvGuardian: invalid settings fall back to defaults: {invalid}")
        return invalid


# Singleton
env_guardian = EnvGuardian()
