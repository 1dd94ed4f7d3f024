"""Exact and numeric verification of Bernstein-Sato identities for
symmetry-breaking kernels and the operator families built from them."""

__version__ = "0.1.0"
