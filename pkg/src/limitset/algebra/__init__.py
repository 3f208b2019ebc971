"""Exact polynomial arithmetic and small bivariate system solving."""

from .gcd import is_square_free, poly_gcd, poly_gcd_many, square_free_part
from .parse import PolySyntaxError, format_poly, parse_poly
from .poly import Point2, Poly, const, var
from .solve import PositiveDimensionalError, SolverError, solve_safe, solve_system

__all__ = [
    "Point2", "Poly", "PolySyntaxError", "PositiveDimensionalError", "SolverError",
    "const", "format_poly", "is_square_free", "parse_poly", "poly_gcd",
    "poly_gcd_many", "solve_safe", "solve_system", "square_free_part", "var",
]
