"""Dyadic lattices, grid functions, averages and maximal functions."""

from cbdom.dyadic.functions import (
    GridFunction,
    average,
    level_averages,
    martingale_difference,
    maximal_function,
)
from cbdom.dyadic.lattice import MAX_LEVEL, DyadicCube, DyadicLattice, GridBox

__all__ = [
    "MAX_LEVEL",
    "DyadicCube",
    "DyadicLattice",
    "GridBox",
    "GridFunction",
    "average",
    "level_averages",
    "martingale_difference",
    "maximal_function",
]
