"""Signed graph augmentation: balance-screened edge edits and a difficulty curriculum for SGCN."""

__version__ = "0.1.0"
