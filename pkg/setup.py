from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "cascade_lens.kernels._speedups",
                ["src/cascade_lens/kernels/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython at build time: install pure-Python only, the kernel
    # dispatcher falls back to cascade_lens.kernels.pure at import.
    ext_modules = []

setup(ext_modules=ext_modules)
