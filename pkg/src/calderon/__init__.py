"""Desk-scale Calderon projectors for Dirac operators twisted by Hilbert
C*-module bundles.

Subpackages: :mod:`calderon.csalg` (finite-dimensional C*-algebras),
:mod:`calderon.hilbmod` (Hilbert A-module linear algebra),
:mod:`calderon.sobolev` (discrete Sobolev scales on the torus and half
torus), :mod:`calderon.dirac` (product Dirac models and the invertible
double), :mod:`calderon.projector` (Poisson operator, Calderon projector,
principal symbol, APS comparison) and :mod:`calderon.cli` (batch front
door).
"""

from .errors import (
    CalderonError,
    CertificationError,
    SpectrumError,
    StructureError,
)

__version__ = "0.1.0"

__all__ = [
    "CalderonError",
    "StructureError",
    "CertificationError",
    "SpectrumError",
    "__version__",
]
