import os

from setuptools import Extension, setup

# Set PFABRIK_NO_EXT=1 to install the pure-Python fallback only.
ext_modules = []
if not os.environ.get("PFABRIK_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("pfabrik._reach_c", ["src/pfabrik/_reach_c.pyx"], extra_compile_args=["-O3", "-ffp-contract=off",
                                           # keep separate sin/cos calls: glibc sincos can differ
                                           # by an ulp and the Python fallback must match bitwise
                                           "-fno-builtin-sin", "-fno-builtin-cos"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
