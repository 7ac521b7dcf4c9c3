"""Build script for the optional compiled energization kernel.

The package works without the extension (a numpy fallback is selected at
import time); the build therefore tolerates a missing compiler or Cython.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "gridsleuth._energize_c",
                ["src/gridsleuth/_energize_c.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
