"""
TeraForge package initialization.
"""

__version__ = "0.1.0"
__author__ = "TeraForge Team"
__description__ = "J-Net super-resolution for THz images with PyTorch"
