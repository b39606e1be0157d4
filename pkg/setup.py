import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "eyeseg_eval._core",
                ["src/eyeseg_eval/_core.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
