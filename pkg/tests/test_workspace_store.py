"""
Report cache: content keys, corrupt entries and pruning.

Usage:
  python -m pytest tests/test_workspace_store.py -v
"""

import os

from troptrack.data.workspace_store import CacheStore


def test_keys_ignore_dict_order():
    a = CacheStore.key("tracks enumerate", {"complete": True, "chart": "s04"})
    b = CacheStore.key("tracks enumerate", {"chart": "s04", "complete": True})
    assert a == b
    assert a != CacheStore.key("tracks enumerate", {"chart": "s04", "complete": False})


def test_missing_entry_is_none(tmp_path):
    store = CacheStore(tmp_path)
    assert store.get(CacheStore.key("x", {})) is None


def test_hit_returns_the_same_bytes(tmp_path):
    store = CacheStore(tmp_path)
    calls = []

    def compute():
        calls.append(1)
        return '{\n  "rho": "2.618033989"\n}\n'

    first = store.get_or_compute("loop entropy", {"loop": "LR"}, compute)
    second = store.get_or_compute("loop entropy", {"loop": "LR"}, compute)
    assert first == second
    assert len(calls) == 1


def test_corrupt_entry_is_moved_aside(tmp_path):
    store = CacheStore(tmp_path)
    key = CacheStore.key("fan export", {"chart": "s04"})
    path = store.put(key, "report")
    path.write_text("{ truncated", encoding="utf-8")

    assert store.get(key) is None
    assert not path.exists()
    backups = [p.name for p in path.parent.iterdir() if ".corrupted." in p.name]
    assert len(backups) == 1 and backups[0].startswith(key)


def test_entry_for_another_key_is_corrupt(tmp_path):
    store = CacheStore(tmp_path)
    key = CacheStore.key("a", {})
    other = CacheStore.key("b", {})
    store.put(other, "report")
    store.path(key).parent.mkdir(parents=True, exist_ok=True)
    store.path(key).write_text(store.path(other).read_text(encoding="utf-8"), encoding="utf-8")
    assert store.get(key) is None


def test_prune_deletes_the_oldest_entries(tmp_path):
    store = CacheStore(tmp_path, max_size_mb=0.002)
    keys = [CacheStore.key("report", {"i": i}) for i in range(6)]
    for i, key in enumerate(keys):
        path = store.put(key, "x" * 600)
        os.utime(path, (1_000_000 + i, 1_000_000 + i))

    deleted = store.prune()
    assert deleted >= 1
    assert store.size_mb() < store.target_size_mb
    assert store.get(keys[-1]) is not None
    assert store.get(keys[0]) is None


def test_prune_is_a_noop_under_the_limit(tmp_path):
    store = CacheStore(tmp_path)
    store.put(CacheStore.key("r", {}), "small")
    assert store.prune() == 0
