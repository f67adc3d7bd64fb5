"""Build hook for the optional compiled simplex kernel.

Without Cython or a C compiler the package installs with the numpy kernel
only.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("HYDROCASCADE_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "hydrocascade.lp._pivot_ext",
                    ["src/hydrocascade/lp/_pivot_ext.pyx"],
                    # keep float semantics identical to the numpy kernel
                    extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
