"""Spectral stability of ZND detonations in the high-frequency limit.

Modules: thermo (equation of state), profile (steady detonation), linsys
(linearized system), evans (decaying solution and stability function),
blockform (block diagonalization near infinity), turning (turning points and
frequency regimes), specfun (Airy and Bessel functions), cli.
"""
from .thermo import GasModel
from .profile import ProfileRep, ShockSetup
from .evans import EvansSolver, EvansResult

__all__ = ["GasModel", "ProfileRep", "ShockSetup", "EvansSolver", "EvansResult"]
__version__ = "0.1.0"
