"""Linear programming engine and MGCLP relaxation builder."""
from .model import LpBasis, LpModel, LpSolution
from .simplex import lp_solve

__all__ = ["LpBasis", "LpModel", "LpSolution", "lp_solve"]
