"""Build script: compiles the optional Cython event-loop kernel.

The package works without the extension (a pure-Python engine is selected
at import time), so compilation failures downgrade to a warning instead of
aborting the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, build failure, ...
            warnings.warn(
                f"building the compiled simulation engine failed ({exc!r}); "
                "falling back to the pure-Python engine"
            )

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(
                f"building {ext.name} failed ({exc!r}); "
                "falling back to the pure-Python engine"
            )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "hetjsq.simulation._engine_cy",
        ["src/hetjsq/simulation/_engine_cy.pyx"],
        # -ffp-contract=off keeps the compiled engine bit-identical with the
        # pure-Python engine (no FMA contraction of a*b+c).
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
