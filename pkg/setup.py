"""Build script: compiles the optional accelerated FEM kernels.

The package is fully functional without the extension; damseep.fem.kernels
falls back to the pure NumPy implementation when the compiled module is
missing or DAMSEEP_PURE_PYTHON=1 is set.
"""

import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None


def extensions():
    if cythonize is None or not os.path.exists("src/damseep/fem/_kernels_cy.pyx"):
        return []
    ext = Extension(
        "damseep.fem._kernels_cy",
        ["src/damseep/fem/_kernels_cy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


setup(ext_modules=extensions())
