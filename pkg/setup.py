"""Build the optional compiled stencil kernels.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes the hot loops faster:

    pip install -e . --no-build-isolation
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "barons2d._kernels",
                ["src/barons2d/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
