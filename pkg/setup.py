from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("srv6sfc.wire._codec_cy", ["src/srv6sfc/wire/_codec_cy.pyx"])],
        language_level=3,
    )
except ImportError:
    # Pure-Python codec is selected at import when the extension is absent.
    ext_modules = []

setup(ext_modules=ext_modules)
