"""The Szegő extremal problem ``S(K) = inf_{q(0)=0} int |1 - q|^p K dm``.

Polynomials q are truncated to the first k variables and total degree at
most d.  At p = 2 the problem is a Hermitian positive-definite linear system
in the Fourier coefficients of K; for other p the discretised objective is
minimised by gradient descent.

Signed multi-indices (exponents of ``w`` and ``conj(w)`` both allowed) are
plain integer tuples ``(a_1, ..., a_k)``; unsigned ones may also be given as
:class:`~bohrszego.bohr.MultiIndex`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .bohr import MultiIndex, LiftedPolynomial, poly_from_json, poly_to_json
from .errors import DegenerateWeightError, DomainError, NotOuterError, ResourceError
from .logmean import poisson_log_mean
from .poisson import outer_gap
from .torus import QuadratureGrid, grid_values

# Fraction of grid nodes with K = 0 above which the lower bound is flagged.
ZERO_FRACTION_LIMIT = 0.5
EPS_SCHEDULE = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10)


def _signed(alpha, k: int) -> tuple:
    if isinstance(alpha, MultiIndex):
        return alpha.to_dense(k)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) > k and any(alpha[k:]):
        raise DomainError(f"index {alpha} uses more than {k} variables")
    return (alpha + (0,) * k)[:k]


def _trim(alpha) -> tuple:
    alpha = tuple(int(a) for a in alpha)
    while alpha and alpha[-1] == 0:
        alpha = alpha[:-1]
    return alpha


# Weights ---------------------------------------------------------------------

class WeightSpec:
    """A non-negative weight K on the torus.  Use the two concrete variants."""

    k: int

    @property
    def degree(self) -> int:
        """Per-axis trigonometric degree (an estimate when K is not a trig polynomial)."""
        raise NotImplementedError

    def values(self, grid: QuadratureGrid) -> np.ndarray:
        raise NotImplementedError

    def fourier_array(self, grid: QuadratureGrid) -> np.ndarray:
        """``A[alpha mod N] = K^(alpha)`` for every signed alpha resolved by the grid."""
        vals = self.values(grid)
        return np.fft.fftn(vals) / vals.size if vals.ndim else np.asarray(vals, dtype=complex)

    def scaled(self, lam: float) -> "WeightSpec":
        raise NotImplementedError

    def default_grid(self, d: int = 0) -> QuadratureGrid:
        """Grid with ``N >= 2d + deg K + 1`` nodes per axis, N odd."""
        return QuadratureGrid(max(self.k, 1), (2 * d + self.degree + 1) | 1)


@dataclass(frozen=True)
class ModulusPower(WeightSpec):
    """``K = |h|^p``."""

    h: LiftedPolynomial
    p: float = 2.0

    def __post_init__(self):
        if len(self.h) == 0:
            raise DomainError("h must not be the zero polynomial")
        if not self.p > 0:
            raise DomainError(f"p must be positive, got {self.p}")

    @property
    def k(self) -> int:
        return max(self.h.max_var, 1)

    @property
    def degree(self) -> int:
        m = max(self.h.axis_degrees(self.k), default=0)
        return int(math.ceil(self.p / 2)) * 2 * m if self.p != 2 else 2 * m

    def values(self, grid):
        return np.abs(grid_values(self.h, grid)) ** self.p

    def scaled(self, lam):
        if not lam > 0:
            raise DomainError("scale must be positive")
        return ModulusPower(self.h * lam ** (1.0 / self.p), self.p)

    def log_integral(self) -> float:
        return self.p * poisson_log_mean(self.h)["value"]

    def to_json(self) -> dict:
        return {"type": "modulus_power", "p": self.p, "h": poly_to_json(self.h)}


@dataclass(frozen=True)
class FourierTable(WeightSpec):
    """Trigonometric polynomial ``K = sum K^(alpha) e_alpha`` over signed indices."""

    table: Mapping

    def __post_init__(self):
        clean = {}
        for alpha, c in self.table.items():
            if isinstance(alpha, MultiIndex):
                alpha = alpha.to_dense(alpha.max_var)
            key = _trim(alpha)
            clean[key] = clean.get(key, 0) + complex(c)
        clean = {a: c for a, c in sorted(clean.items()) if c != 0}
        for a, c in clean.items():
            mirror = clean.get(tuple(-x for x in a), 0j)
            if abs(mirror - c.conjugate()) > 1e-12 * max(1.0, abs(c)):
                raise DomainError(f"table is not Hermitian at {a}: {c} vs {mirror}")
        c0 = clean.get((), 0j)
        if not c0.real > 0:
            raise DomainError(f"K^(0) must be positive, got {c0}")
        object.__setattr__(self, "table", clean)

    @property
    def k(self) -> int:
        return max((len(a) for a in self.table), default=0) or 1

    @property
    def degree(self) -> int:
        return max((abs(x) for a in self.table for x in a), default=0)

    def coeff(self, alpha) -> complex:
        return self.table.get(_trim(_signed(alpha, max(self.k, len(tuple(alpha))))), 0j)

    def fourier_array(self, grid):
        N, k = grid.nodes_per_axis, grid.k
        if 2 * self.degree + 1 > N:
            raise ResourceError(f"grid with N={N} aliases a weight of degree {self.degree}")
        A = np.zeros((N,) * k, dtype=complex)
        for a, c in self.table.items():
            A[tuple(x % N for x in _signed(a, k))] += c
        return A

    def values(self, grid):
        A = self.fourier_array(grid)
        return np.real(np.fft.ifftn(A) * A.size)

    def scaled(self, lam):
        if not lam > 0:
            raise DomainError("scale must be positive")
        return FourierTable({a: lam * c for a, c in self.table.items()})

    def as_polynomial(self) -> LiftedPolynomial:
        """``w^m K`` with m the largest negative exponent per axis; ``|w^m K| = K`` on the torus."""
        k = self.k
        shift = [0] * k
        for a in self.table:
            for j, x in enumerate(a):
                shift[j] = max(shift[j], -x)
        return LiftedPolynomial(
            (MultiIndex.from_dense([x + s for x, s in zip(_signed(a, k), shift)]), c)
            for a, c in self.table.items()
        )

    def log_integral(self) -> float:
        return poisson_log_mean(self.as_polynomial())["value"]

    def to_json(self) -> dict:
        return {"type": "fourier", "terms": [
            {"alpha": list(a), "re": c.real, "im": c.imag} for a, c in self.table.items()
        ]}


def weight_from_json(obj: Mapping) -> WeightSpec:
    kind = obj.get("type")
    if kind == "modulus_power":
        return ModulusPower(poly_from_json(obj["h"]), float(obj.get("p", 2.0)))
    if kind == "fourier":
        return FourierTable({
            tuple(t["alpha"]): complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
            for t in obj["terms"]
        })
    raise DomainError(f"unknown weight type {kind!r}")


def fourier_coeff(K: WeightSpec, alpha, grid: QuadratureGrid | None = None) -> complex:
    """``K^(alpha) = int K conj(e_alpha) dm`` for a signed index alpha."""
    grid = grid or K.default_grid(max((abs(a) for a in _signed(alpha, K.k)), default=0))
    A = K.fourier_array(grid)
    N = grid.nodes_per_axis
    return complex(A[tuple(a % N for a in _signed(alpha, grid.k))])


def weight_summary(K: WeightSpec, grid: QuadratureGrid) -> dict:
    """Minimum of K on the grid and the fraction of nodes where it vanishes."""
    vals = K.values(grid)
    top = float(np.max(np.abs(vals))) if vals.size else 0.0
    return {
        "min": float(np.min(vals)),
        "zero_fraction": float(np.mean(vals <= 1e-14 * top)) if top > 0 else 1.0,
    }


@dataclass(frozen=True)
class LowerBound:
    value: float
    log_integral: float
    unreliable: bool
    min_on_grid: float

    def __float__(self):
        return self.value


def lower_bound(K: WeightSpec, grid: QuadratureGrid | None = None) -> LowerBound:
    """``exp(int log K dm)``, the smallest value S(K) can take."""
    summary = weight_summary(K, grid or K.default_grid())
    if summary["zero_fraction"] >= 1.0:
        raise DomainError("K vanishes on the whole grid")
    log_int = K.log_integral()
    return LowerBound(math.exp(log_int), log_int, summary["zero_fraction"] > ZERO_FRACTION_LIMIT,
                      summary["min"])


# Index sets ------------------------------------------------------------------

def build_index_set(k: int, d: int) -> list:
    """Every nonzero multi-index in k variables with total degree <= d.

    Ordered by total degree, then lexicographically descending on the dense
    exponent vector (so ``z1^2`` precedes ``z1 z2`` precedes ``z2^2``).
    """
    if k < 1 or d < 1:
        raise DomainError(f"need k, d >= 1 (got k={k}, d={d})")
    out = []
    for total in range(1, d + 1):
        level = [e for e in itertools.product(range(total + 1), repeat=k) if sum(e) == total]
        out.extend(MultiIndex.from_dense(e) for e in sorted(level, reverse=True))
    return out


# Results ---------------------------------------------------------------------

@dataclass
class SzegoConfig:
    p: float = 2.0
    k: int = 1
    d: int = 1
    nodes: int | None = None
    gtol: float = 1e-11
    max_iter: int = 4000
    eps_schedule: tuple = EPS_SCHEDULE

    def __post_init__(self):
        if not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if self.k < 1 or self.d < 1:
            raise DomainError(f"need k, d >= 1 (got k={self.k}, d={self.d})")

    def grid(self, K: WeightSpec) -> QuadratureGrid:
        need = 2 * self.d + K.degree + 1
        N = self.nodes or need | 1
        if N < need:
            raise DomainError(f"grid needs at least {need} nodes per axis, got {N}")
        return QuadratureGrid(max(self.k, K.k), N)


@dataclass
class SzegoResult:
    value: float
    index_set: list
    coeffs: np.ndarray
    lower: float
    upper: float
    p: float
    converged: bool = True
    residual: float = 0.0
    iterations: int = 0
    lower_unreliable: bool = False
    extras: dict = field(default_factory=dict)

    def in_sandwich(self, tol: float = 1e-8) -> bool:
        return self.lower - tol <= self.value <= self.upper + tol

    def polynomial(self) -> LiftedPolynomial:
        return LiftedPolynomial(zip(self.index_set, self.coeffs))

    def to_json(self) -> dict:
        return {
            "S": self.value, "lower": self.lower, "upper": self.upper, "p": self.p,
            "converged": self.converged, "residual": self.residual,
            "lower_unreliable": self.lower_unreliable,
            "coeffs": [
                {"alpha": [list(t) for t in a], "re": float(c.real), "im": float(c.imag)}
                for a, c in zip(self.index_set, self.coeffs)
            ],
        }


def _dense_indices(A: Sequence[MultiIndex], k: int) -> np.ndarray:
    if any(a.max_var > k for a in A):
        raise DomainError(f"index set uses more than {k} variables")
    return np.array([a.to_dense(k) for a in A], dtype=np.int64).reshape(len(A), k)


def gram_system(K: WeightSpec, A: Sequence[MultiIndex], grid: QuadratureGrid) -> tuple:
    """``(G, b, K^(0))`` with ``G[b, a] = K^(beta - alpha)`` and ``b[beta] = K^(beta)``."""
    F = K.fourier_array(grid)
    N = grid.nodes_per_axis
    D = _dense_indices(A, grid.k)
    diff = (D[:, None, :] - D[None, :, :]) % N
    G = F[tuple(diff[..., j] for j in range(grid.k))]
    b = F[tuple(D[:, j] % N for j in range(grid.k))]
    return G, b, float(F[(0,) * grid.k].real)


def szego_p2(K: WeightSpec, A: Sequence[MultiIndex], grid: QuadratureGrid | None = None) -> SzegoResult:
    """Exact p = 2 solve: ``G c = b`` by Cholesky, ``S = K^(0) - Re(b^H c)``."""
    A = list(A)
    if grid is None:
        d = max((a.degree for a in A), default=0)
        k = max([K.k] + [a.max_var for a in A])
        grid = QuadratureGrid(k, (2 * d + K.degree + 1) | 1)
    G, b, k0 = gram_system(K, A, grid)
    if A:
        try:
            factor = scipy.linalg.cho_factor(G, lower=True)
        except np.linalg.LinAlgError as exc:
            raise DegenerateWeightError(f"Gram matrix of size {len(A)} is not positive definite") from exc
        c = scipy.linalg.cho_solve(factor, b)
        residual = float(np.max(np.abs(G @ c - b)))
    else:
        c = np.zeros(0, dtype=complex)
        residual = 0.0
    value = k0 - float(np.real(np.vdot(b, c)))
    lb = lower_bound(K, grid)
    return SzegoResult(value, A, c, lb.value, k0, 2.0, True, residual, 0, lb.unreliable)


# General p -------------------------------------------------------------------

class SmoothedObjective:
    """``Phi(c) = mean K (|1 - q_c|^2 + eps^2)^(p/2)`` on a grid, with its gradient.

    The gradient ``g`` is normalised so that ``dPhi = Re(sum conj(g) dc)``.
    """

    def __init__(self, K: WeightSpec, A: Sequence[MultiIndex], grid: QuadratureGrid, p: float):
        self.p = p
        self.grid = grid
        self.N = grid.nodes_per_axis
        self.K = K.values(grid)
        D = _dense_indices(A, grid.k)
        self.idx = tuple(D[:, j] % self.N for j in range(grid.k))
        self.size = self.K.size

    def _q(self, c: np.ndarray) -> np.ndarray:
        C = np.zeros(self.K.shape, dtype=complex)
        np.add.at(C, self.idx, c)
        return np.fft.ifftn(C) * self.size

    def value(self, c, eps: float = 0.0) -> float:
        u = 1.0 - self._q(c)
        return float(np.mean(self.K * (np.abs(u) ** 2 + eps**2) ** (self.p / 2)))

    def value_and_grad(self, c, eps: float) -> tuple:
        u = 1.0 - self._q(c)
        s = np.abs(u) ** 2 + eps**2
        phi = float(np.mean(self.K * s ** (self.p / 2)))
        W = self.K * s ** (self.p / 2 - 1) * u
        g = -self.p * (np.fft.fftn(W) / self.size)[self.idx]
        return phi, g


def _descend(obj: SmoothedObjective, c: np.ndarray, eps: float, gtol: float, max_iter: int) -> tuple:
    """Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking."""
    phi, g = obj.value_and_grad(c, eps)
    step = 1.0 / max(obj.p * float(np.max(obj.K)), 1e-300)
    prev = None
    for it in range(max_iter):
        gnorm = float(np.sqrt(np.real(np.vdot(g, g))))
        if gnorm <= gtol:
            return c, phi, g, it, True
        if prev is not None:
            s, y = c - prev[0], g - prev[1]
            sy = float(np.real(np.vdot(s, y)))
            if sy > 0:
                step = float(np.real(np.vdot(s, s))) / sy
        prev = (c, g)
        while True:
            trial = c - step * g
            phi_t, g_t = obj.value_and_grad(trial, eps)
            if phi_t <= phi - 1e-4 * step * gnorm**2:
                break
            step *= 0.5
            if step * gnorm**2 <= 4e-16 * abs(phi):
                # No decrease is visible in double precision: numerically stationary.
                return c, phi, g, it, gnorm <= 1e-6 * max(abs(phi), 1.0)
        c, phi, g = trial, phi_t, g_t
    return c, phi, g, max_iter, False


def szego_general(K: WeightSpec, cfg: SzegoConfig, A: Sequence[MultiIndex] | None = None,
                  start: np.ndarray | None = None, cold: bool = False) -> SzegoResult:
    """Minimise the grid objective over q with index set A (default ``build_index_set(cfg.k, cfg.d)``).

    Starts from the better of the p = 2 solution and ``start`` (for ladders),
    or from q = 0 when ``cold`` is set, then runs gradient descent through
    the smoothing schedule ``cfg.eps_schedule``.
    ``converged`` is False when the line search stalls or the iteration cap
    is hit before the gradient drops below ``cfg.gtol``.
    """
    A = list(A) if A is not None else build_index_set(cfg.k, cfg.d)
    grid = cfg.grid(K)
    obj = SmoothedObjective(K, A, grid, cfg.p)
    seed = szego_p2(K, A, grid)
    c = np.zeros(len(A), dtype=complex) if cold else seed.coeffs.astype(complex)
    if start is not None and obj.value(start) < obj.value(c):
        c = np.asarray(start, dtype=complex)
    if cfg.p == 2:
        schedule = cfg.eps_schedule[-1:]
    else:
        schedule = cfg.eps_schedule
    converged, iterations, g = True, 0, np.zeros_like(c)
    for eps in schedule:
        c, _, g, it, ok = _descend(obj, c, eps, cfg.gtol, cfg.max_iter)
        iterations += it
        converged = ok
    value = obj.value(c)
    F = np.fft.fftn(obj.K) / obj.size
    return SzegoResult(
        value, A, c, seed.lower, float(F[(0,) * grid.k].real), cfg.p, converged,
        float(np.sqrt(np.real(np.vdot(g, g)))), iterations, seed.lower_unreliable,
    )


def solve(K: WeightSpec, cfg: SzegoConfig, start=None) -> SzegoResult:
    """``szego_p2`` when p = 2, otherwise ``szego_general``."""
    if cfg.p == 2:
        return szego_p2(K, build_index_set(cfg.k, cfg.d), cfg.grid(K))
    return szego_general(K, cfg, start=start)


def _embed(prev: SzegoResult, A: Sequence[MultiIndex]) -> np.ndarray:
    old = dict(zip(prev.index_set, prev.coeffs))
    return np.array([old.get(a, 0j) for a in A], dtype=complex)


def szego_ladder(K: WeightSpec, cfg: SzegoConfig, degrees: Sequence[int]) -> list:
    """Solve at each degree in ``degrees`` (ascending); general-p solves warm start from the previous one."""
    out, prev = [], None
    for d in degrees:
        step_cfg = SzegoConfig(cfg.p, cfg.k, d, cfg.nodes, cfg.gtol, cfg.max_iter, cfg.eps_schedule)
        start = _embed(prev, build_index_set(cfg.k, d)) if prev is not None else None
        prev = solve(K, step_cfg, start)
        out.append(prev)
    return out


def _monotone(values: Sequence[float], slack: float) -> bool:
    return all(b <= a + slack for a, b in zip(values, values[1:]))


# Certificates ----------------------------------------------------------------

def certify_lower_attainment(h: LiftedPolynomial, p: float, cfg: SzegoConfig,
                             ladder: Sequence[int], target: float = 1e-5) -> dict:
    """Ladder of ``S_d(|h|^p) - exp(p int log|h|)`` for an outer h.

    The report records the ladder and whether it is non-increasing (slack
    1e-10 at p = 2, 1e-6 otherwise) and ends below ``target``.
    """
    classification = outer_gap(h)
    if not classification.outer:
        raise NotOuterError(f"h is not outer (gamma={classification.gamma})", classification.to_json())
    K = ModulusPower(h, p)
    results = szego_ladder(K, SzegoConfig(p, max(cfg.k, K.k), cfg.d, None, cfg.gtol, cfg.max_iter,
                                          cfg.eps_schedule), sorted(ladder))
    lower = results[0].lower if results else lower_bound(K).value
    gaps = [r.value - lower for r in results]
    slack = 1e-10 if p == 2 else 1e-6
    monotone = _monotone(gaps, slack)
    below = bool(gaps) and gaps[-1] <= target
    return {
        "lower": lower,
        "ladder": [{"d": d, "S": r.value, "gap": g, "converged": r.converged}
                   for d, r, g in zip(sorted(ladder), results, gaps)],
        "monotone": monotone,
        "target": target,
        "passed": monotone and below and all(r.converged for r in results),
        "outer": classification.to_json(),
    }


def certify_upper(K: WeightSpec, k: int, d: int, grid: QuadratureGrid | None = None,
                  zero_tol: float = 1e-10) -> dict:
    """Check the vanishing of ``K^(alpha)``, ``0 < |alpha| <= d``, against ``S_d = K^(0)``.

    Vanishing coefficients must give ``S_d == K^(0)``.  Otherwise the best
    single-monomial competitor ``q = t e_alpha`` already lowers the objective
    by ``|K^(alpha)|^2 / K^(0)``, and ``S_d`` must lie below that.
    """
    A = build_index_set(k, d)
    grid = grid or QuadratureGrid(max(k, K.k), (2 * d + K.degree + 1) | 1)
    result = szego_p2(K, A, grid)
    G, b, k0 = gram_system(K, A, grid)
    i = int(np.argmax(np.abs(b)))
    top = float(np.abs(b[i]))
    if top < zero_tol:
        passed = abs(result.value - k0) <= 1e-12 * k0 and float(np.max(np.abs(result.coeffs))) <= 1e-12
        margin = 0.0
    else:
        margin = top**2 / k0
        passed = result.value <= k0 - margin + 1e-12
    return {
        "max_coeff": top,
        "argmax": [list(t) for t in A[i]],
        "vanishing": top < zero_tol,
        "S": result.value,
        "upper": k0,
        "lower": result.lower,
        "margin": margin,
        "passed": bool(passed),
    }
