import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # Without Cython the package still installs; the pure-numpy kernel
    # fallback is selected at import time.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "leadtime.kernels._speedups",
                ["src/leadtime/kernels/_speedups.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
