"""cbdom: convex body sparse domination for vector-valued dyadic operators."""

__version__ = "0.1.0"
