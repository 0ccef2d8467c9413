"""Magnetic Laplacian with white-noise magnetic field on the 2-torus."""

__version__ = "0.1.0"
