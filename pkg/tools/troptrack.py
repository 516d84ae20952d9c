#!/usr/bin/env python
"""
troptrack launcher for a source checkout.

Usage:
    python tools/troptrack.py tracks enumerate troptrack/data/fixtures/s04.json --complete
"""

import pathlib
import sys

# ── Project root on sys.path ─────────────────────────────────────────────────
ROOT = pathlib.Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

if sys.platform == "win32":
    try:
        sys.stdout.reconfigure(encoding="utf-8")
    except AttributeError:
        pass

from troptrack.cli import main  # noqa: E402

if __name__ == "__main__":
    main()
