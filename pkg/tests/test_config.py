"""
Settings from the environment and their startup validation.

Usage:
  python -m pytest tests/test_config.py -v
"""

from troptrack.config import DEFAULTS, get_settings
from troptrack.utils.env_guardian import env_guardian


def test_defaults(monkeypatch):
    for key in ("TROPTRACK_MAX_ITER", "TROPTRACK_STABILITY_WINDOW", "TROPTRACK_MAX_POWER"):
        monkeypatch.delenv(key, raising=False)
    settings = get_settings()
    assert settings.max_iter == int(DEFAULTS["TROPTRACK_MAX_ITER"])
    assert settings.stability_window == 5
    assert settings.max_power == 6


def test_environment_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("TROPTRACK_MAX_ITER", "12")
    monkeypatch.setenv("TROPTRACK_LOG_LEVEL", "debug")
    settings = get_settings()
    assert settings.max_iter == 12
    assert settings.log_level == "DEBUG"
    assert settings.cache_dir == tmp_path / "cache"


def test_invalid_integers_fall_back(monkeypatch):
    monkeypatch.setenv("TROPTRACK_MAX_ITER", "-3")
    monkeypatch.setenv("TROPTRACK_WORKERS", "many")
    settings = get_settings()
    assert settings.max_iter == int(DEFAULTS["TROPTRACK_MAX_ITER"])
    assert settings.workers == 1


def test_guardian_reports_invalid_keys(monkeypatch, tmp_path):
    monkeypatch.setenv("TROPTRACK_STABILITY_WINDOW", "0")
    monkeypatch.setenv("TROPTRACK_LOG_LEVEL", "LOUD")
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    monkeypatch.setenv("TROPTRACK_CACHE_DIR", str(blocker))
    assert sorted(env_guardian.validate()) == ["TROPTRACK_CACHE_DIR", "TROPTRACK_LOG_LEVEL",
                                               "TROPTRACK_STABILITY_WINDOW"]


def test_guardian_accepts_the_test_environment():
    assert env_guardian.validate() == []
