"""Positive solution of the tetrahedron equation and the 3D lattice models built from it."""

from .qpoly import LaurentPoly, q_pochhammer
from .rmatrix import r_element, r_value

__version__ = "0.1.0"
__all__ = ["LaurentPoly", "q_pochhammer", "r_element", "r_value", "__version__"]
