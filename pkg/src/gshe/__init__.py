"""Numerical laboratory for the exponentially small splitting of the
stationary generalized Swift-Hohenberg equation near its
Hamiltonian-Hopf bifurcation."""

__version__ = "0.1.0"
