"""
Langevin smoothing lab: ULA and smoothed ULA for mixture weakly smooth potentials.
"""

__version__ = "0.1.0"
