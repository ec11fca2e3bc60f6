"""
Composite optimization problems.
"""

from .composite import CompositeProblem, random_problem
from .terms import NonsmoothTerm, QuadraticCost

__all__ = ["CompositeProblem", "NonsmoothTerm", "QuadraticCost", "random_problem"]
