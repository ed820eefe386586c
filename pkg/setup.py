import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "mbqc_deutsch._mle_kernel",
                ["src/mbqc_deutsch/_mle_kernel.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3", "-fcx-limited-range"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
