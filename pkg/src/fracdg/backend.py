"""Select the fractional-assembly kernel at import: compiled core or numpy.

Set FRACDG_FORCE_PY=1 to force the pure-Python kernel even when the Cython
extension is built.
"""

from __future__ import annotations

import os

from . import _assembly_py

_FORCED_PY = os.environ.get("FRACDG_FORCE_PY", "") not in ("", "0")

try:
    from . import _assembly_cy
    HAVE_COMPILED = True
except ImportError:
    _assembly_cy = None
    HAVE_COMPILED = False


def kernel_name() -> str:
    """Name of the kernel selected at import ('compiled' or 'python')."""
    return "compiled" if (HAVE_COMPILED and not _FORCED_PY) else "python"


def get_kernel(name: str | None = None):
    """Return the accumulate_blocks callable for the requested backend."""
    if name is None:
        name = kernel_name()
    if name == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled assembly kernel is not available")
        return _assembly_cy.accumulate_blocks
    if name == "python":
        return _assembly_py.accumulate_blocks
    raise ValueError(f"unknown kernel {name!r}")
