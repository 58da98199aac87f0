import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off: the reference backend is plain numpy arithmetic and the
# two must agree bitwise, so fused multiply-adds are disabled.
extensions = [
    Extension(
        "qlos.kernels._fast",
        sources=["src/qlos/kernels/_fast.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O2", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level="3"))
