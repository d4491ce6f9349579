from setuptools import Extension, setup

# The Cython kernel is optional: without it the package falls back to the
# pure-numpy traversal in polarflip._kernel_py.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "polarflip._sc_ext",
                ["src/polarflip/_sc_ext.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
