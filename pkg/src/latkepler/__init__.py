"""Semiclassical and quantum dynamics of a particle on a lattice with a Coulomb source."""
from .lattice import (
    CoulombSource,
    LatticeParams,
    PhaseState,
    UniformField,
)

__version__ = "0.1.0"
