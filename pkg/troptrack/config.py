"""
TropTrack settings — read once from the environment (and the project .env).

Variables:
  TROPTRACK_CACHE_DIR         workspace cache root (default ~/.cache/troptrack)
  TROPTRACK_CACHE_MAX_MB      prune threshold for the cache (default 256)
  TROPTRACK_LOG_LEVEL         CLI root log level (default WARNING)
  TROPTRACK_STABILITY_WINDOW  consecutive agreeing iterations K (default 5)
  TROPTRACK_MAX_ITER          stability iteration budget (default 60)
  TROPTRACK_MAX_POWER         loop powers tried automatically, 1..R (default 6)
  TROPTRACK_WORKERS           worker threads for orbit sampling (default 1)
  TROPTRACK_PROGRESS          "1" shows tqdm bars on long enumerations
"""
import logging
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).parent.parent

load_dotenv(PROJECT_ROOT / ".env")

DEFAULTS = {
    "TROPTRACK_CACHE_DIR": str(Path.home() / ".cache" / "troptrack"),
    "TROPTRACK_CACHE_MAX_MB": "256",
    "TROPTRACK_LOG_LEVEL": "WARNING",
    "TROPTRACK_STABILITY_WINDOW": "5",
    "TROPTRACK_MAX_ITER": "60",
    "TROPTRACK_MAX_POWER": "6",
    "TROPTRACK_WORKERS": "1",
    "TROPTRACK_PROGRESS": "0",
}


def _int_env(key: str) -> int:
    raw = os.getenv(key, DEFAULTS[key])
    try:
        value = int(raw)
        if value <= 0:
            raise ValueError(f"{key} must be positive")
        return value
    except ValueError:
        logger.warning(f"[Config] {key}={raw!r} is not a positive integer, using {DEFAULTS[key]}")
        return int(DEFAULTS[key])


@dataclass(frozen=True)
class Settings:
    cache_dir: Path
    cache_max_mb: int
    log_level: str
    stability_window: int
    max_iter: int
    max_power: int
    workers: int
    progress: bool

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            cache_dir=Path(os.getenv("TROPTRACK_CACHE_DIR", DEFAULTS["TROPTRACK_CACHE_DIR"])).expanduser(),
            cache_max_mb=_int_env("TROPTRACK_CACHE_MAX_MB"),
            log_level=os.getenv("TROPTRACK_LOG_LEVEL", DEFAULTS["TROPTRACK_LOG_LEVEL"]).upper(),
            stability_window=_int_env("TROPTRACK_STABILITY_WINDOW"),
            max_iter=_int_env("TROPTRACK_MAX_ITER"),
            max_power=_int_env("TROPTRACK_MAX_POWER"),
            workers=_int_env("TROPTRACK_WORKERS"),
            progress=os.getenv("TROPTRACK_PROGRESS", "0") in ("1", "true", "yes"),
        )


def get_settings() -> Settings:
    """Settings are re-read on every call so tests can monkeypatch the env."""
    return Settings.from_env()
