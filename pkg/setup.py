"""Build script for the compiled kernel extension.

The package works without the extension (a pure-Python fallback is selected
at import time); building it is strongly recommended for the performance
envelope of the large placement and frontier-walk inputs.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [Extension("stageopt._native", ["src/stageopt/_native.pyx"])],
        language_level=3,
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
