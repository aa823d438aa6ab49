from setuptools import setup, find_packages

setup(
    name="teraforge",
    version="0.1.0",
    description="J-Net super-resolution for THz images: degradation, training and evaluation",
    author="TeraForge Team",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.11.0",
        "h5py>=3.10.0",
        "pillow>=10.0.0",
        "torch>=2.1.0",
    ],
    extras_require={
        "test": [
            "hypothesis>=6.80.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "teraforge=cli.commands:main",
        ],
    },
)
