# setup.py
from setuptools import setup

setup(
    name="yamabe-flow",
    version="0.1.0",
    description="Rotationally symmetric Yamabe flow simulator",
    author="Adam Fuzum",
    author_email="fuzumoe@gmail.com",
    package_dir={"": "src"},  # Look for packages in src/
    packages=["yamabe_flow"],  # Explicitly specify the package
    include_package_data=True,
    package_data={"yamabe_flow": ["artifacts/*.j2"]},
    install_requires=[
        "Jinja2",
        "python-dotenv",
        "numpy",
        "scipy",
    ],
    extras_require={"dev": ["pytest", "mpmath", "ruff"]},
    entry_points={
        "console_scripts": [
            "yamabe-flow = yamabe_flow.cli:main",
        ]
    },
)
