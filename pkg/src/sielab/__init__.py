"""Variational layer potentials and skeleton integral equations for 2D Helmholtz transmission problems."""
__version__ = "0.1.0"
