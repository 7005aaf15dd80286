"""Build script: compiles the optional gate-kernel extension.

If the toolchain is missing the install still succeeds; the package then
falls back to the pure-numpy kernels at import time.
"""

from setuptools import setup
from setuptools.extension import Extension

try:
    import numpy as np
    from Cython.Build import cythonize

    # -ffast-math lets gcc vectorize the exp/tanh gate loops via libmvec
    ext_modules = cythonize(
        [
            Extension(
                "serforge._gatekernels",
                ["src/serforge/_gatekernels.pyx"],
                extra_compile_args=["-O3", "-ffast-math", "-march=native"],
                libraries=["mvec", "m"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
    include_dirs = [np.get_include()]
except Exception:
    ext_modules = []
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
