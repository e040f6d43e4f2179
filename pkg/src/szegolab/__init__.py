"""Numerical laboratory for CMV matrices with Verblunsky coefficients
sampled along hyperbolic torus orbits."""

__version__ = "0.1.0"
