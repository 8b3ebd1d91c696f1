"""Pointwise verification of Chern curvature positivity for Hermitian bundles."""

from rcpos.config import Tolerances, DEFAULT_TOLERANCES
from rcpos.errors import RcposError

__version__ = "0.1.0"

__all__ = ["Tolerances", "DEFAULT_TOLERANCES", "RcposError", "__version__"]
