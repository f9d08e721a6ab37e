"""Build shim: compiles the optional Cython kernel extension when Cython and a
C toolchain are available, and falls back to the pure-Python kernels otherwise.

The package is fully functional without the extension; the compiled module only
accelerates the nascent-delta evaluators used by the numeric checks.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """build_ext that downgrades compiler failures to a warning."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            print(f"warning: compiled kernels skipped ({exc}); using pure-Python backend")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            print(f"warning: {ext.name} skipped ({exc}); using pure-Python backend")


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "deltaforge.numeric.kernels._ckernels",
                ["src/deltaforge/numeric/kernels/_ckernels.pyx"],
            )
        ],
        compiler_directives={"language_level": 3},
    )
except ImportError:  # pragma: no cover - cython not installed
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
