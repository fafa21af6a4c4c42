"""Build script for the compiled scoring kernel.

The extension is optional: when Cython or a C compiler is unavailable the
package installs without it and falls back to the numpy kernels at import
time (see smrtrack.kernels).
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension("smrtrack._kernels_c", ["src/smrtrack/_kernels_c.pyx"])],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
