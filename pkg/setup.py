#!/usr/bin/env python
from setuptools import setup, find_packages
from os import path
import codecs
import re


def read(*parts):
    file_path = path.join(path.dirname(__file__), *parts)
    return codecs.open(file_path, encoding="utf-8").read()


def find_version(*parts):
    version_file = read(*parts)
    version_match = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]", version_file, re.M)
    if version_match:
        return str(version_match.group(1))
    raise RuntimeError("Unable to find version string.")


setup(
    name="django-tilepress",
    version=find_version("tilepress", "__init__.py"),
    license="Apache 2.0",
    install_requires=[
        "numpy>=1.21",
        "scipy>=1.7",
        "Django>=3.2",
    ],
    requires=[
        "Django (>=3.2)",
    ],
    extras_require={
        "tests": ["hypothesis>=6.0"],
    },
    entry_points={
        "console_scripts": ["tilepress = tilepress.cli:main"],
    },
    description="Pressure, equilibrium states and large deviations of checkerboard pillow maps",
    long_description=read("README.rst"),
    packages=find_packages(exclude=("example*",)),
    include_package_data=True,
    zip_safe=False,
    python_requires=">=3.8",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Framework :: Django",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Framework :: Django :: 3.2",
        "Framework :: Django :: 4.0",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
