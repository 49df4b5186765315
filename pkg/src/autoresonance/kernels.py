"""Backend selection for the integration kernels.

The compiled extension is preferred; the pure-Python mirror is used when it
is missing or when ``AUTORESONANCE_PURE_PYTHON`` is set to a true value.
"""

import os

from . import _kernels_py

COMPLETED = _kernels_py.COMPLETED
ESCAPED = _kernels_py.ESCAPED
VALIDITY_VIOLATION = _kernels_py.VALIDITY_VIOLATION
STEP_LIMIT = _kernels_py.STEP_LIMIT
STIFF = _kernels_py.STIFF

STATUS_NAMES = {
    COMPLETED: "completed",
    ESCAPED: "escaped",
    VALIDITY_VIOLATION: "validity_violation",
    STEP_LIMIT: "step_limit",
    STIFF: "stiff",
}


def _load():
    if os.environ.get("AUTORESONANCE_PURE_PYTHON", "").lower() in ("1", "true", "yes"):
        return _kernels_py, "python"
    try:
        from . import _kernels
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "cython"


backend, BACKEND = _load()
integrate_phase = backend.integrate_phase
integrate_duffing = backend.integrate_duffing
