"""Poisson kernels on the infinite torus, Jensen gaps and the outer-function test."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bohr import LiftedPolynomial
from .errors import DomainError
from .logmean import poisson_log_mean
from .torus import QuadratureGrid, grid_values

OUTER_TOL = 1e-6


@dataclass(frozen=True)
class PoissonPoint:
    """Finitely supported point of the polydisk; coordinates past the end are 0."""

    coords: tuple

    def __post_init__(self):
        coords = tuple(complex(z) for z in self.coords)
        if any(abs(z) >= 1 for z in coords):
            raise DomainError(f"every coordinate must satisfy |z| < 1: {coords}")
        object.__setattr__(self, "coords", coords)

    def __len__(self):
        return len(self.coords)

    @property
    def sup_norm(self) -> float:
        """``max_w P_zeta(w) = prod (1 + |z|) / (1 - |z|)``."""
        return math.prod((1 + abs(z)) / (1 - abs(z)) for z in self.coords)

    def nodes_for(self, tol: float = 1e-12) -> int:
        """Per-axis node count making the aliasing error of the kernel below ``tol``."""
        r = max((abs(z) for z in self.coords), default=0.0)
        if r == 0:
            return 1
        # The aliased kernel tail is 2 r^N / (1 - r^N) <= 2 r^N / (1 - r).
        return max(int(math.ceil(math.log(tol * (1 - r) / 2) / math.log(r))), 1)


def _as_point(zeta) -> PoissonPoint:
    return zeta if isinstance(zeta, PoissonPoint) else PoissonPoint(tuple(zeta))


def kernel_eval(zeta, w: Sequence):
    """``P_zeta(w) = prod_n (1 - |zeta_n|^2) / |zeta_n - w_n|^2``.

    ``w`` holds one (array of) torus coordinate(s) per coordinate of ``zeta``;
    extra entries of ``w`` are ignored since they meet ``zeta_n = 0``.
    """
    zeta = _as_point(zeta)
    if len(w) < len(zeta):
        raise DomainError(f"need {len(zeta)} torus coordinates, got {len(w)}")
    out = np.ones(())
    for z, wn in zip(zeta.coords, w):
        if z != 0:
            out = out * (1 - abs(z) ** 2) / np.abs(z - np.asarray(wn)) ** 2
    return out[()] if out.ndim == 0 else out


def poisson_integral(boundary, zeta, grid: QuadratureGrid | None = None):
    """Grid quadrature of ``int P_zeta * boundary dm``.

    ``boundary`` is a polynomial or a callable of k coordinate arrays.  The
    default grid resolves the kernel to 1e-12.
    """
    zeta = _as_point(zeta)
    if grid is None:
        k = len(zeta)
        if isinstance(boundary, LiftedPolynomial):
            k = max(k, boundary.max_var)
        N = zeta.nodes_for()
        if isinstance(boundary, LiftedPolynomial):
            N += max(boundary.axis_degrees(k), default=0)
        grid = QuadratureGrid(k, N | 1)
    if grid.k < len(zeta):
        raise DomainError(f"grid has {grid.k} variables, point has {len(zeta)}")
    weights = kernel_eval(zeta, grid.points())
    vals = grid_values(boundary, grid)
    mean = np.mean(weights * vals)
    return complex(mean) if np.iscomplexobj(mean) else float(mean)


def jensen_gap(F: LiftedPolynomial, zeta, grid: QuadratureGrid | None = None) -> float:
    """``int P_zeta log|F| dm - log|F(zeta)|``; ``inf`` when ``F(zeta) = 0``.

    Non-negative for every polynomial, with equality at every point exactly
    when F is outer.
    """
    if len(F) == 0:
        raise DomainError("jensen_gap is undefined for the zero polynomial")
    zeta = _as_point(zeta)
    res = poisson_log_mean(F, zeta.coords, nodes=grid.nodes_per_axis if grid else None, check=False)
    return res["gap"]


@dataclass(frozen=True)
class OuterReport:
    gamma: float
    outer: bool
    tol: float
    error: float = 0.0

    def to_json(self) -> dict:
        gamma = self.gamma if math.isfinite(self.gamma) else "inf"
        return {"gamma": gamma, "outer": self.outer, "tol": self.tol, "error": self.error}


def outer_gap(F: LiftedPolynomial, tol: float = OUTER_TOL, nodes: int | None = None) -> OuterReport:
    """``Gamma F = int log|F| dm - log|F(0)|`` and the outer classification.

    F is classified outer when ``Gamma F <= tol + error``.  ``F(0) = 0``
    gives ``Gamma = inf`` (not outer) rather than an error.  A passing
    classification says nothing about cyclicity.
    """
    if len(F) == 0:
        raise DomainError("outer_gap is undefined for the zero polynomial")
    if F.constant_term == 0:
        return OuterReport(math.inf, False, tol)
    res = poisson_log_mean(F, (), nodes=nodes)
    gamma = res["gap"]
    return OuterReport(gamma, gamma <= tol + res["error"], tol, res["error"])


def is_outer(F: LiftedPolynomial, tol: float = OUTER_TOL) -> bool:
    return outer_gap(F, tol).outer


def boundary_callable(F: LiftedPolynomial) -> Callable:
    """Wrap a polynomial as a callable of torus coordinate arrays."""
    k = F.max_var

    def f(*w):
        out = np.zeros(np.broadcast(*w).shape if w else (), dtype=complex)
        for alpha, c in F:
            term = c
            for j, e in alpha:
                term = term * w[j - 1] ** e
            out = out + term
        return out

    f.k = k
    return f
