"""
TropTrack workspace cache — content-addressed reports under TROPTRACK_CACHE_DIR.

Handles:
  - Keys                  → sha256 of the canonical JSON of (command, inputs)
  - Missing entry         → get() returns None
  - Corrupt entry         → moved aside to <key>.corrupted.<ts>.json, treated as missing
  - Concurrent writers    → tmp file + os.replace, so readers never see half a file
  - Size limit            → prune() deletes the oldest entries until under target

Entries store the emitted report text verbatim, so a cache hit reproduces
the original output byte for byte.

Usage:
    from troptrack.data.workspace_store import CacheStore

    store = CacheStore.from_settings()
    key = store.key("tracks enumerate", {"triangulation": doc, "complete": True})
    text = store.get(key)
    if text is None:
        text = render(...)
        store.put(key, text)
"""
import hashlib
import json
import logging
import os
import shutil
import tempfile
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

from troptrack.config import get_settings

logger = logging.getLogger(__name__)

ENTRY_SUFFIX = ".json"


class CacheStore:
    def __init__(self, cache_dir, max_size_mb: int = 256, target_ratio: float = 0.75):
        self.cache_dir = Path(cache_dir)
        self.max_size_mb = max_size_mb
        self.target_size_mb = max_size_mb * target_ratio
        self.lock = threading.Lock()

    @classmethod
    def from_settings(cls) -> "CacheStore":
        settings = get_settings()
        return cls(settings.cache_dir / "reports", settings.cache_max_mb)

    # ── Public API ──────────────────────────────────────────────────────────

    @staticmethod
    def key(command: str, inputs: Any) -> str:
        payload = json.dumps({"command": command, "inputs": inputs}, sort_keys=True,
                             ensure_ascii=False, separators=(",", ":"), default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def path(self, key: str) -> Path:
        return self.cache_dir / key[:2] / f"{key}{ENTRY_SUFFIX}"

    def get(self, key: str) -> Optional[str]:
        """Cached report text, or None when absent or unreadable."""
        p = self.path(key)
        if not p.exists():
            return None
        try:
            with open(p, "r", encoding="utf-8") as f:
                entry = json.load(f)
            if not isinstance(entry, dict) or entry.get("key") != key or not isinstance(entry.get("report"), str):
                raise ValueError("entry does not carry a report for this key")
        except Exception as e:
            logger.error(f"[Workspace] Cannot read cache entry {p.name}: {e}")
            self._backup_corrupt(p)
            return None
        logger.debug(f"[Workspace] hit {key[:12]} ({entry.get('command')})")
        return entry["report"]

    def put(self, key: str, report: str, command: str = "") -> Path:
        p = self.path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        entry = {"key": key, "command": command, "report": report,
                 "created": datetime.now(timezone.utc).strftime("%Y%m%d%H%M%S")}
        fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=".tmp-", suffix=ENTRY_SUFFIX)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(entry, f, ensure_ascii=False, indent=2)
            os.replace(tmp, p)
        except Exception:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        logger.debug(f"[Workspace] stored {key[:12]} ({command})")
        return p

    def get_or_compute(self, command: str, inputs: Any, compute) -> str:
        key = self.key(command, inputs)
        cached = self.get(key)
        if cached is not None:
            return cached
        report = compute()
        self.put(key, report, command)
        self.prune()
        return report

    def size_mb(self) -> float:
        total = 0
        if not self.cache_dir.exists():
            return 0.0
        for dirpath, _, filenames in os.walk(self.cache_dir):
            for name in filenames:
                try:
                    total += os.path.getsize(os.path.join(dirpath, name))
                except OSError:
                    pass
        return total / (1024 * 1024)

    def prune(self) -> int:
        """Delete oldest entries once the cache exceeds max_size_mb. Returns the count deleted."""
        with self.lock:
            if self.size_mb() <= self.max_size_mb:
                return 0
            entries = []
            for p in self.cache_dir.rglob(f"*{ENTRY_SUFFIX}"):
                try:
                    entries.append((p, p.stat().st_mtime))
                except OSError:
                    pass
            entries.sort(key=lambda e: e[1])
            deleted = 0
            for p, _ in entries:
                if self.size_mb() < self.target_size_mb:
                    break
                try:
                    p.unlink()
                    deleted += 1
                except OSError as e:
                    logger.warning(f"[Workspace] Failed to delete {p.name}: {e}")
            logger.info(f"[Workspace] pruned {deleted} entries, {self.size_mb():.2f} MB left")
            return deleted

    # ── Internal helpers ────────────────────────────────────────────────────

    def _backup_corrupt(self, p: Path) -> None:
        try:
            ts = datetime.now(timezone.utc).strftime("%Y%m%d%H%M%S")
            backup = p.with_name(p.name.replace(ENTRY_SUFFIX, f".corrupted.{ts}{ENTRY_SUFFIX}"))
            shutil.move(str(p), str(backup))
            logger.warning(f"[Workspace] Corrupt entry moved to {backup}")
        except Exception as be:
            logger.error(f"[Workspace] Could not back up corrupt entry: {be}")
