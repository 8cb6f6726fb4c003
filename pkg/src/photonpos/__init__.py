"""Photon position operators, wave functions and observables on a k-space grid."""

from .kspace import KGrid, PhysicalConstants, PoleError, build_grid
from .polarization import make_basis
from .quantum import PhotonState

__version__ = "0.1.0"

__all__ = ["KGrid", "PhysicalConstants", "PoleError", "PhotonState", "build_grid", "make_basis"]
