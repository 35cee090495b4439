"""Build script for the optional compiled time-march kernels.

The package is fully functional without the extension (a pure numpy
backend is selected at import time); the extension only speeds up the
per-step state updates of the Monte-Carlo marches.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "sdwave.backends._kernels",
                ["src/sdwave/backends/_kernels.pyx"],
                # -ffp-contract=off: no FMA contraction, so the compiled
                # march is bit-identical to the pure numpy backend.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=extensions)
