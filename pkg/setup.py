import pathlib

import setuptools

long_description = (pathlib.Path(__file__).parent / "README.md").read_text()

setuptools.setup(
    name="elmid",
    version="v0.1.0",
    description="Online identification of nonlinear dynamic systems with ELM random-projection models.",
    author="elmid developers",
    license="MIT",
    keywords=["system identification", "extreme learning machine", "adaptive estimation", "recursive least squares"],
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests", "examples", "examples.*"]),
    python_requires=">=3.8",
    install_requires=[
        "numpy >= 1.22",
        "scipy >= 1.8",
    ],
    extras_require={
        "dev": ["pytest >= 7.4", "black", "isort", "pre-commit"],
    },
    entry_points={
        "console_scripts": [
            "elmid = elmid.cli:main",
        ],
    },
)
