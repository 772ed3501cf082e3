"""Build the optional Cython kernels; the package imports a pure-Python
fallback when the extension is absent."""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("GAUSSDAG_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            "src/gaussdag/_kernels/_ckernels.pyx",
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
