"""Energization kernel selection.

Prefers the compiled extension and falls back to the numpy implementation
when the build skipped it. Set ``GRIDSLEUTH_KERNEL=python`` or ``=c`` to
force a backend; forcing ``c`` when the extension is missing raises at
import time rather than silently degrading.
"""

from __future__ import annotations

import os


def _load():
    want = os.environ.get("GRIDSLEUTH_KERNEL", "").strip().lower()
    if want == "python":
        from . import _energize_py

        return _energize_py.energize_fixed_point, "python"
    if want == "c":
        from . import _energize_c

        return _energize_c.energize_fixed_point, "c"
    if want not in ("", "auto"):
        raise ValueError(f"GRIDSLEUTH_KERNEL must be 'c', 'python', or 'auto', got {want!r}")
    try:
        from . import _energize_c

        return _energize_c.energize_fixed_point, "c"
    except ImportError:
        from . import _energize_py

        return _energize_py.energize_fixed_point, "python"


energize_fixed_point, BACKEND = _load()
