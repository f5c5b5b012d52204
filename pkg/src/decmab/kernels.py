"""Selects the compiled episode kernels when available, else the pure-Python round loop.

Set DECMAB_PURE_PYTHON=1 to ignore the extension even when it is built; the
two paths produce bit-identical ledgers (see tests/test_kernel_equivalence.py).
"""

from __future__ import annotations

import os

try:
    from decmab import _kernels as compiled
except ImportError:  # extension not built; simulator falls back to the object loop
    compiled = None


def force_pure_python() -> bool:
    return os.environ.get("DECMAB_PURE_PYTHON", "").strip().lower() in {"1", "true", "yes"}


def compiled_available() -> bool:
    return compiled is not None and not force_pure_python()
