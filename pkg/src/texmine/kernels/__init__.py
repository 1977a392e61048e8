"""Hot numeric kernels with a compiled core and a pure-numpy fallback.

The Cython extension is preferred when importable. Set TEXMINE_KERNEL=numpy
to force the fallback, or TEXMINE_KERNEL=native to require the extension
(import then fails if it was not built). BACKEND names the active choice.
"""

import os

_requested = os.environ.get("TEXMINE_KERNEL", "").strip().lower()
if _requested not in ("", "native", "numpy"):
    raise ImportError(
        f"TEXMINE_KERNEL must be 'native' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    from texmine.kernels import numpy_backend as _impl

    BACKEND = "numpy"
else:
    try:
        from texmine.kernels import _native as _impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        if _requested == "native":
            raise
        from texmine.kernels import numpy_backend as _impl

        BACKEND = "numpy"

cell_histograms = _impl.cell_histograms
pair_distances = _impl.pair_distances
region_search = _impl.region_search


def load_backend(name):
    """Import a specific backend module by name, for benchmarks and tests."""
    if name == "numpy":
        from texmine.kernels import numpy_backend

        return numpy_backend
    if name == "native":
        from texmine.kernels import _native  # type: ignore[attr-defined]

        return _native
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    """Names of importable backends, native first when built."""
    names = []
    try:
        load_backend("native")
        names.append("native")
    except ImportError:
        pass
    names.append("numpy")
    return names
