"""Backend selection for the numeric kernels.

The compiled ``_core`` extension is used when it was built; otherwise the
numpy implementations in ``_fallback`` are used. Both expose the same names.
"""

from . import _fallback

try:
    from . import _core as _impl

    BACKEND = "cython"
except ImportError:  # extension not built
    _impl = _fallback
    BACKEND = "python"

weight_array = _impl.weight_array
cpt_sorted_sum = _impl.cpt_sorted_sum
quadratic = _impl.quadratic
rosenbrock = _impl.rosenbrock

U_IDENTITY = _fallback.U_IDENTITY
U_POWER = _fallback.U_POWER
W_IDENTITY = _fallback.W_IDENTITY
W_POWER = _fallback.W_POWER
W_TK = _fallback.W_TK


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _fallback}
    if BACKEND == "cython":
        found["cython"] = _impl
    return found
