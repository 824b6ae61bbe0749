"""Exact FKG / association checks for lattice-valued Markov chains."""

__version__ = "0.1.0"
