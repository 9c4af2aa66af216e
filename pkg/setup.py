"""Build script: compiles the optional propagation kernel extension.

The extension is a plain speed-up; if it fails to build (no compiler,
no Cython), the package installs anyway and falls back to the pure-Python
kernel at import time.
"""
import logging

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

log = logging.getLogger("cfclab.setup")

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "cfclab._kernel",
                ["src/cfclab/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # -ffp-contract=off keeps the compiled kernel bit-compatible
                # with the pure-Python fallback (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError as exc:  # pragma: no cover - build environment dependent
    log.warning("Cython/numpy unavailable (%s); building pure-Python only", exc)


class OptionalBuildExt(build_ext):
    """Never fail the install because the accelerator did not compile."""

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            log.warning("skipping optional extension %s: %s", ext.name, exc)


setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
