"""
Statistical edge analysis for sparse-view 2D CT.

Local filtered-backprojection reconstructions near a jump of the density,
the Gaussian limit of their noise, likelihood ratio tests for edges, power
and ROC analysis, direction/magnitude uncertainty and edge maps.
"""

__version__ = "0.1.0"
