"""Kernel backend selection: compiled extension if importable, numpy otherwise.

Set IFSLAB_BACKEND=python to force the numpy fallback.
"""

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _fallback}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available():
    return sorted(_BACKENDS)


def get(name=None):
    """Return the kernel module called name, or the default one."""
    if name is None:
        name = os.environ.get("IFSLAB_BACKEND", "")
        if not name:
            return _compiled if _compiled is not None else _fallback
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available()}") from None


def default_name():
    mod = get()
    return "compiled" if mod is _compiled and _compiled is not None else "python"
