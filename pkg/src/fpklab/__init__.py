"""Numerical verification lab for perturbed Ornstein-Uhlenbeck FPK equations."""
__version__ = "0.1.0"
