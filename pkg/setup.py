"""Build script for the optional compiled core.

The extension is best-effort: when Cython or a C compiler is unavailable the
package installs without it and ``twinbeam._backend`` falls back to NumPy.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("TWINBEAM_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "twinbeam._core",
                    ["src/twinbeam/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        print(f"twinbeam: building without compiled core ({exc})")
        ext_modules = []

setup(ext_modules=ext_modules)
