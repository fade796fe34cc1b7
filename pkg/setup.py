"""Build hook for the optional compiled kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so a missing compiler or Cython must not break installation.
"""

import warnings

from setuptools import Extension, setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        warnings.warn(f"compiled kernels skipped ({exc}); using NumPy fallback")
        return []
    ext = Extension(
        "taylorlaw.kernels._ckernels",
        ["src/taylorlaw/kernels/_ckernels.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off keeps float arithmetic identical to the NumPy
        # lane (no FMA contraction), so both backends emit the same streams.
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
