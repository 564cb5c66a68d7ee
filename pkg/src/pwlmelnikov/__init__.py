"""Melnikov analysis of a piecewise linear Hamiltonian system with a homoclinic loop."""

__version__ = "0.1.0"
