"""Exact and certified computations for measure-preserving systems.

Rotations, torus translations, the Bernoulli shift and the baker's map act
exactly on rational interval, box, cylinder and dyadic-rectangle sets.
Rank-one cutting-and-stacking constructions are handled through their level
structure, with interval-valued answers where a finite stage cannot decide.
"""
from .errors import DomainError, ErgolabError, ResourceError

__all__ = ["DomainError", "ErgolabError", "ResourceError"]
__version__ = "0.1.0"
