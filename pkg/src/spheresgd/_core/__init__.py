"""Inner-loop backend selection.

The sequential coefficient recursion is the only hot loop in the package.  A
compiled Cython version is used when the extension built at install time;
otherwise a pure-numpy fallback with identical semantics takes over.  Set
SPHERESGD_FORCE_FALLBACK=1 to skip the compiled version (used by the parity
tests and the benchmark).
"""

import os

from . import fallback

if os.environ.get("SPHERESGD_FORCE_FALLBACK"):
    run_sgd = fallback.run_sgd
    BACKEND = "fallback"
else:
    try:
        from ._speedups import run_sgd

        BACKEND = "cython"
    except ImportError:
        run_sgd = fallback.run_sgd
        BACKEND = "fallback"

KIND_POWER = 0
KIND_NTK = 1
