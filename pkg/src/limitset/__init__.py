"""Realize planar semialgebraic sets as limit periodic sets of polynomial vector field families."""

__version__ = "0.1.0"
