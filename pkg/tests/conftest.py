"""
Shared fixtures: bundled workspace documents and a private cache directory.
"""
import os
import sys

# project root on sys.path
_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, _ROOT)

from dotenv import load_dotenv
load_dotenv(os.path.join(_ROOT, ".env"))

import pytest

FIXTURES = os.path.join(_ROOT, "troptrack", "data", "fixtures")
SURFACES = ("s04", "s05", "s11", "s12")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, f"{name}.json")


def load_workspace(name: str):
    from troptrack.utils.serialization import load_workspace as _load

    return _load(fixture_path(name))


@pytest.fixture(autouse=True)
def _private_cache(tmp_path, monkeypatch):
    """Never touch the user's cache; keep progress bars off."""
    monkeypatch.setenv("TROPTRACK_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.setenv("TROPTRACK_PROGRESS", "0")
    monkeypatch.setenv("TROPTRACK_WORKERS", "1")


@pytest.fixture
def s04():
    return load_workspace("s04").triangulation


@pytest.fixture
def torus_lr():
    return load_workspace("torus_lr")


@pytest.fixture
def twist():
    return load_workspace("s04_twist")


@pytest.fixture(params=SURFACES)
def surface_tri(request):
    return load_workspace(request.param).triangulation
