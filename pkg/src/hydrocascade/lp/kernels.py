"""Selection of the simplex inner-loop implementation.

The compiled ``_pivot_ext`` kernel is used when it was built; otherwise the
numpy kernel in ``_pivot``. Set ``HYDROCASCADE_KERNEL=python`` to force the
fallback.
"""
import os

from . import _pivot
from ._pivot import ITERATION_LIMIT, OPTIMAL, UNBOUNDED  # noqa: F401

try:
    from . import _pivot_ext
except ImportError:  # extension not compiled
    _pivot_ext = None

AVAILABLE = {"python": _pivot}
if _pivot_ext is not None:
    AVAILABLE["compiled"] = _pivot_ext

if os.environ.get("HYDROCASCADE_KERNEL", "").lower() == "python" or _pivot_ext is None:
    DEFAULT = "python"
else:
    DEFAULT = "compiled"


def get(name=None):
    """Kernel module by name (``"compiled"`` or ``"python"``); ``None`` gives the default."""
    name = name or DEFAULT
    try:
        return AVAILABLE[name]
    except KeyError:
        raise ValueError(f"kernel {name!r} is not available; have {sorted(AVAILABLE)}") from None


def select(name):
    """Make ``name`` the process-wide default kernel."""
    global DEFAULT
    get(name)
    DEFAULT = name
