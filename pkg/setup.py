import os

import numpy as np
from setuptools import Extension, setup

# The compiled core is optional: if Cython or a compiler is missing the
# package still installs and runs on the numpy fallback.
ext_modules = []
if os.environ.get("MIDA_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "mida._core",
                    ["src/mida/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
