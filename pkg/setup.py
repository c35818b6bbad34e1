from setuptools import setup, find_packages

setup(
    name="ranklab",
    version="0.1.0",
    description="Search-ranking congestion lab: tied-logit estimation, counterfactual rankings and frontiers",
    long_description=open("README.md", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=("tests", "tests.*", "examples", "examples.*")),
    python_requires=">=3.10",

    install_requires=[
        "numpy>=1.26",
        "scipy>=1.11",
        "pandas>=2.0",
        "scikit-learn>=1.3",
    ],

    extras_require={
        "test": [
            "pytest>=7",
        ],
    },

    entry_points={
        "console_scripts": [
            "ranklab=ranklab.cli:main",
        ],
    },

    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Information Analysis",
    ],

    license="Apache-2.0",
    zip_safe=False,
)
