from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "admmprune._kernels._accel",
                ["src/admmprune/_kernels/_accel.pyx"],
                language="c++",
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )

# package_dir must be stated here as well: build_ext resolves the in-place
# copy destination for editable installs from it, not from pyproject.
setup(ext_modules=ext_modules, package_dir={"": "src"})
