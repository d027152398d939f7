"""Coupled local-DG finite element / boundary element solver for the 2D
Laplace transmission problem on the unit square, with a convergence-study
driver reproducing the manufactured-solution experiment."""

__version__ = "0.1.0"
