"""Dirichlet series on the infinite polydisk: Bohr lifts, torus integrals,
Poisson-Jensen gaps, Szegő infima and the l^1 = l^1 * c_0 factorisation."""
from .bohr import (
    DirichletSeries,
    LiftedPolynomial,
    MultiIndex,
    factorize,
    index_of,
    lift,
    multiply,
    unlift,
)
from .errors import (
    DegenerateWeightError,
    DomainError,
    IndexOverflowError,
    NotOuterError,
    ResourceError,
)
from .torus import QuadratureGrid

__all__ = [
    "DirichletSeries", "LiftedPolynomial", "MultiIndex", "QuadratureGrid",
    "factorize", "index_of", "lift", "multiply", "unlift",
    "DegenerateWeightError", "DomainError", "IndexOverflowError", "NotOuterError", "ResourceError",
]
__version__ = "0.1.0"
