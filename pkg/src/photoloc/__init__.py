"""Lattice one- and two-photon localization laboratory."""

__version__ = "0.1.0"
