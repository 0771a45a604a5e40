"""Build script: compiles the optional Cython marching kernel.

The package is fully functional without the extension; `memsteer._core`
falls back to the NumPy implementation when the compiled module is
missing (or when MEMSTEER_PURE_PY=1 is set).
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "memsteer._core._march_cy",
        sources=["src/memsteer/_core/_march_cy.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    pass

setup(ext_modules=ext_modules)
