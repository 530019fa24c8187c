"""Build script for the optional compiled scoring kernels.

The package works without the extension: hyqa._kernels falls back to a
numpy implementation at import time if the compiled module is missing.
"""

import logging

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

log = logging.getLogger("hyqa.setup")


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        log.warning("Cython or numpy unavailable; skipping compiled kernels")
        return []
    ext = Extension(
        "hyqa._kernels._scoring",
        ["src/hyqa/_kernels/_scoring.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


class OptionalBuildExt(build_ext):
    """Build the extension if possible, carry on with the fallback if not."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            log.warning("compiled kernels skipped: %s", exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            log.warning("building %s failed: %s", ext.name, exc)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
