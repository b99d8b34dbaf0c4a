"""Build the optional Cython kernels.

The package works without them; ``spatial_trees.kernels`` falls back to the
NumPy implementations when the extension is missing.
"""

import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SPATIAL_TREES_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "spatial_trees._ckernels",
                    ["src/spatial_trees/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
