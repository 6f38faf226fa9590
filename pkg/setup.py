import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FRACDG_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "fracdg._assembly_cy",
                    ["src/fracdg/_assembly_cy.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython available: install with the pure-Python kernel only.
        ext_modules = []

setup(ext_modules=ext_modules)
