"""Integrator backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
twin. ``PPASSIVE_BACKEND=python`` forces the fallback.
"""

import os

from . import _kernel_py

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernel_py.integrate_lure}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled.integrate_lure

DEFAULT_BACKEND = os.environ.get("PPASSIVE_BACKEND") or (
    "compiled" if _compiled is not None else "python")

METHODS = {"rk4": 0, "rosenbrock": 1}


def get_integrator(backend=None):
    name = backend or DEFAULT_BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
