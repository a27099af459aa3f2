"""Build the optional Cython core.

The package works without it (a numpy fallback is selected at import time),
so a missing compiler or Cython only costs speed, not functionality.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        "src/spheresgd/_core/_speedups.pyx",
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    include_dirs = [numpy.get_include()]
except ImportError:
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
