"""Build the optional Cython kernels.

Installing without a C compiler or Cython still works: the package then
falls back to the NumPy kernels at import time.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("FRACSPACE_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "fracspace._kernels._ckernels",
                    ["src/fracspace/_kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
