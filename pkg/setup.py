"""Build the optional Cython extension.

If Cython or a C compiler is missing the package installs without it and
``qubitpair.kernels`` falls back to the pure-Python loops.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("QUBITPAIR_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        extensions = [
            Extension(
                "qubitpair._kernels",
                ["src/qubitpair/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ]
        ext_modules = cythonize(extensions,
                                compiler_directives={"language_level": "3"})
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
