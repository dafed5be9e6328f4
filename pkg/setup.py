"""Build script: compiles the optional direct-convolution extension.

The package works without the extension (a NumPy fallback is selected at
import time); the compiled core only accelerates the O(N^6) direct
convolution engine.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "landaulab._direct_conv",
                ["src/landaulab/_direct_conv.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
