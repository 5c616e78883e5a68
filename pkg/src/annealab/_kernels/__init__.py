"""Kernel backend selection.

The compiled Cython core is used when it was built; otherwise the numpy
reference implementation takes over transparently. Set ANNEALAB_PURE=1 to
force the fallback (used by the parity tests and the benchmark).
"""

import os

from . import _ref

GLAUBER = _ref.GLAUBER
METROPOLIS = _ref.METROPOLIS

if os.environ.get("ANNEALAB_PURE"):
    _core = None
else:
    try:
        from . import _core
    except ImportError:
        _core = None

backend = _core if _core is not None else _ref
USING_COMPILED = _core is not None

build_generator = backend.build_generator
build_mapped = backend.build_mapped
apply_generator = backend.apply_generator
apply_mapped = backend.apply_mapped
run_master_rk4 = backend.run_master_rk4
run_imtime_rk4 = backend.run_imtime_rk4
