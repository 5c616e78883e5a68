"""Build script. The compiled kernel extension is optional: if Cython (or a C
compiler) is unavailable, the package installs anyway and falls back to the
pure-numpy kernels at import time."""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy as np
    from setuptools import Extension

    ext = Extension(
        "annealab._kernels._core",
        ["src/annealab/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    print("Cython not available; building without the compiled kernel core.")

setup(ext_modules=ext_modules)
