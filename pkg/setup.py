"""Build script for the optional compiled kernel.

The package works without the extension (a numpy fallback is selected at
import time), so a failing C build downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # no compiler, broken toolchain, ...
            print(f"WARNING: compiled kernel skipped ({exc}); "
                  "aoinet will use the numpy fallback", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "aoinet will use the numpy fallback", file=sys.stderr)


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython not available; aoinet will use the numpy "
              "fallback", file=sys.stderr)
        return []
    ext = Extension(
        "aoinet._core",
        ["src/aoinet/_core.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
