"""Hot reduction kernels with a compiled core and a numpy fallback.

The compiled extension is preferred when the build produced it; otherwise
the numpy lane is used transparently.  ``BACKEND`` records which lane is
active, and :func:`get_backend` exposes both for the cross-checking tests
and the benchmark script.
"""

from . import _numpy

try:  # pragma: no cover - depends on the build environment
    from . import _core

    _impl = _core
    BACKEND = "compiled"
except ImportError:  # pragma: no cover
    _core = None
    _impl = _numpy
    BACKEND = "numpy"


def get_backend(name: str):
    """Return a kernel module by name ('compiled' or 'numpy')."""
    if name == "numpy":
        return _numpy
    if name == "compiled":
        if _core is None:
            raise ImportError("the compiled kernel extension is not installed")
        return _core
    raise ValueError(f"unknown kernel backend '{name}'")


sq_dists_to_point = _impl.sq_dists_to_point
pairwise_sq_dists = _impl.pairwise_sq_dists
segment_sorted_sums = _impl.segment_sorted_sums
within_pair_sums = _impl.within_pair_sums
