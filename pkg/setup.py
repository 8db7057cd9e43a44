import os

from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to pure Python
# when Cython or a C compiler is unavailable.
ext_modules = []
if os.environ.get("UB_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "ultrabroyden._kernels",
                    ["src/ultrabroyden/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
