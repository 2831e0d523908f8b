"""Build script: compiles the optional Cython kernels when Cython is present."""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("vnwb._kernels", ["src/vnwb/_kernels.pyx"])],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
except ImportError:  # pure-Python install; vnwb.kernels falls back automatically
    ext_modules = []

setup(ext_modules=ext_modules)
