"""Identifiability analysis of blind SIMO subspace channel estimation"""

__version__ = "1.0.0"
