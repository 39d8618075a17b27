import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "modeseek._kernels._core",
                ["src/modeseek/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython available: install the pure-NumPy package only.  The
    # backend selector in modeseek._kernels falls back automatically.
    extensions = []

setup(ext_modules=extensions)
