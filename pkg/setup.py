"""Build script for the optional compiled core.

The package is fully functional without the extension: ``igroup._backend``
falls back to the numpy implementation in ``igroup._core_py`` when the
compiled module is absent. The extension only accelerates the hot kernels
(DTW dynamic programming and bandwidth-grid leave-one-out sweeps).
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "igroup._core",
                ["src/igroup/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    # No Cython available: install the pure-python package only.
    ext_modules = []

setup(ext_modules=ext_modules)
