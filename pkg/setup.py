"""Build script: compiles the optional fast slicing kernel.

The extension is optional -- if Cython or a C compiler is unavailable the
package installs anyway and falls back to the pure-Python kernel at import.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "slicyl._speedups",
        sources=["src/slicyl/_speedups.pyx"],
        # -ffp-contract=off: keep FP results bit-identical with the pure-Python
        # kernel (no fused multiply-add contraction).
        extra_compile_args=["-O3", "-ffp-contract=off"],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    pass

setup(ext_modules=ext_modules)
