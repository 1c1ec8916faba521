"""bathchain: exact chain representations of bosonic environments plus a TEBD
matrix-product-state engine for the resulting 1D lattices."""

from .errors import BathchainError

__all__ = ["BathchainError"]

__version__ = "0.1.0"
