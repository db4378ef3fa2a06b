"""Build script: compiles the optional native kernels.

The package works without the extension (pure numpy fallback selected at
import), so a missing compiler or a failed Cython build must not break
installation.  -ffp-contract=off keeps the C arithmetic bit-compatible with
the pure backend: no FMA fusing, same operation order, same IEEE doubles.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, broken toolchain, ...
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            "solverank: native kernels not built (%s); "
            "falling back to the pure-Python backend" % exc,
            file=sys.stderr,
        )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "solverank._kernels._native",
        ["src/solverank/_kernels/_native.pyx"],
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
