"""Builds the optional Cython kernel extension.

The package works without it: spinbench._kernels falls back to the pure
NumPy/Python implementations when the compiled module is missing.
"""

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise warn and continue."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any toolchain failure is non-fatal
            print(f"warning: building spinbench._kernels._cykernels failed ({exc}); "
                  "falling back to the pure-Python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: {ext.name} failed to compile ({exc}); "
                  "falling back to the pure-Python kernels")


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "spinbench._kernels._cykernels",
                ["src/spinbench/_kernels/_cykernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
