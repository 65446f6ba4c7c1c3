"""Haar-measure quadrature on truncated tori and the metrics built on it.

Integrals over ``T^k`` use the equal-weight tensor grid of N-th roots of
unity.  A polynomial is sampled on that grid with one inverse FFT, which is
exact at the nodes for any degree (``w^N = 1``), and the grid mean of a
trigonometric polynomial is exact once N exceeds its per-axis degree.
Sums go through ``numpy.mean``, whose pairwise reduction has a fixed order,
so results are bit-reproducible.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bohr import DirichletSeries, LiftedPolynomial, abschnitt, lift, vertical_shift, evaluate_line
from .errors import DomainError, ResourceError
from .logmean import poisson_log_mean

NODE_BUDGET = 10**7
# Default node count for automatically sized grids; keeps one evaluation in the ms range.
DEFAULT_WORK = 1 << 18
LOG_FLOOR = 1e-14
KOROBOV_GENERATOR = 17797


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor grid of N-th roots of unity on ``T^k``."""

    k: int
    nodes_per_axis: int

    def __post_init__(self):
        if self.k < 0:
            raise DomainError(f"k must be >= 0, got {self.k}")
        if self.nodes_per_axis < 1:
            raise DomainError(f"nodes_per_axis must be >= 1, got {self.nodes_per_axis}")
        if self.size > NODE_BUDGET:
            raise ResourceError(
                f"{self.nodes_per_axis}^{self.k} = {self.size} nodes exceeds the budget of "
                f"{NODE_BUDGET}; use qmc_integral for this many variables"
            )

    @property
    def size(self) -> int:
        return self.nodes_per_axis**self.k

    def axis(self) -> np.ndarray:
        N = self.nodes_per_axis
        return np.exp(2j * np.pi * np.arange(N) / N)

    def points(self) -> list:
        """Sparse (broadcastable) coordinate arrays ``w_1, ..., w_k``."""
        ax = self.axis()
        return np.meshgrid(*([ax] * self.k), indexing="ij", sparse=True) if self.k else []

    def refined(self, factor: int) -> "QuadratureGrid":
        return QuadratureGrid(self.k, self.nodes_per_axis * factor)

    def describe(self) -> str:
        return f"grid k={self.k} N={self.nodes_per_axis}"


def auto_grid(k: int, min_nodes: int = 1, work: int = DEFAULT_WORK) -> QuadratureGrid:
    """Odd per-axis node count of about ``work ** (1/k)``, at least ``min_nodes``."""
    if k == 0:
        return QuadratureGrid(0, 1)
    N = max(int(math.floor(work ** (1.0 / k) + 1e-9)), min_nodes, 3)
    if N % 2 == 0:
        N -= 1 if N - 1 >= min_nodes else -1
    return QuadratureGrid(k, N)


def grid_for(F: LiftedPolynomial, k: int | None = None, work: int = DEFAULT_WORK) -> QuadratureGrid:
    """Automatic grid able to integrate ``|F|^2`` exactly."""
    k = F.max_var if k is None else k
    return auto_grid(k, 2 * max(F.axis_degrees(k), default=0) + 1, work)


def grid_values(F, grid: QuadratureGrid) -> np.ndarray:
    """Sample ``F`` (polynomial or callable of k coordinate arrays) on ``grid``."""
    k, N = grid.k, grid.nodes_per_axis
    if isinstance(F, LiftedPolynomial):
        if F.max_var > k:
            raise DomainError(f"polynomial uses {F.max_var} variables but the grid has {k}")
        if k == 0:
            return np.asarray(F.constant_term, dtype=complex)
        coeffs = np.zeros((N,) * k, dtype=complex)
        for alpha, c in F:
            coeffs[tuple(e % N for e in alpha.to_dense(k))] += c
        return np.fft.ifftn(coeffs) * grid.size
    values = np.asarray(F(*grid.points()))
    return np.broadcast_to(values, (N,) * k) if values.shape != (N,) * k else values


# Pointwise transforms applied to complex samples.
def identity(z):
    return z


def log1p_abs(z):
    return np.log1p(np.abs(z))


def abs_square(z):
    return np.abs(z) ** 2


def abs_power(p: float) -> Callable:
    def transform(z):
        return np.abs(z) ** p

    transform.__name__ = f"abs_power_{p:g}"
    return transform


def log_abs(z):
    """``log|z|`` with ``|z|`` clamped below at 1e-14."""
    return np.log(np.maximum(np.abs(z), LOG_FLOOR))


def log_plus_abs(z):
    return np.maximum(log_abs(z), 0.0)


def haar_integral(F, grid: QuadratureGrid | None = None, transform: Callable = identity):
    """Equal-weight grid average of ``transform(F(w))`` over ``T^k``.

    Returns a float when the transformed samples are real, else a complex.
    """
    if grid is None:
        if not isinstance(F, LiftedPolynomial):
            raise DomainError("a grid is required for callables")
        grid = grid_for(F)
    vals = transform(grid_values(F, grid))
    mean = np.mean(vals)
    if np.iscomplexobj(mean):
        return complex(mean)
    return float(mean)


@dataclass
class MetricReport:
    """A computed value together with its error estimate and provenance."""

    value: float
    error: float
    method: str
    converged: bool = True
    history: list = field(default_factory=list)

    def __float__(self):
        return float(self.value)


def korobov_vector(k: int, N: int, a: int = KOROBOV_GENERATOR) -> np.ndarray:
    """Generating vector ``(1, a, a^2, ...) mod N``."""
    z = np.empty(k, dtype=np.int64)
    g = 1
    for j in range(k):
        z[j] = g
        g = (g * a) % N
    return z


def qmc_integral(F: Callable, k: int, N: int, seed: int = 0, shifts: int = 8,
                 generator: int = KOROBOV_GENERATOR) -> MetricReport:
    """Randomly shifted rank-1 lattice estimate of a Haar integral on ``T^k``.

    ``F`` receives ``k`` coordinate arrays of unit-modulus points and must
    return real values.  The error is the standard error across shifts.
    """
    if N < 2:
        raise DomainError(f"lattice needs N >= 2, got {N}")
    if shifts < 8:
        raise DomainError(f"at least 8 random shifts are required, got {shifts}")
    rng = np.random.default_rng(seed)
    z = korobov_vector(k, N, generator)
    base = (np.arange(N, dtype=np.int64)[:, None] * z[None, :] % N) / N
    estimates = np.empty(shifts)
    for s in range(shifts):
        x = (base + rng.random(k)) % 1.0
        w = np.exp(2j * np.pi * x)
        estimates[s] = np.mean(np.asarray(F(*w.T), dtype=float))
    value = float(np.mean(estimates))
    error = float(np.std(estimates, ddof=1) / math.sqrt(shifts))
    return MetricReport(value, error, f"rank-1 lattice k={k} N={N} a={generator} shifts={shifts}")


def radial_dilate(F: LiftedPolynomial, r: float) -> LiftedPolynomial:
    """``F_[r](w) = F(r w_1, r^2 w_2, ...)``: scale ``c_alpha`` by ``r^(sum j alpha_j)``."""
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"dilation radius must lie in [0, 1], got {r}")
    if r == 1.0:
        return F
    return LiftedPolynomial({a: c * r ** a.weighted_degree for a, c in F})


def metric_d0(F: LiftedPolynomial, grid: QuadratureGrid | None = None) -> float:
    """``||F||_0``: Haar mean of ``log(1 + |F|)``.

    Polynomials are continuous on the closed polydisk and the dilation
    integrals increase with r, so the supremum over r is the value at r = 1.
    """
    return haar_integral(F, grid or grid_for(F), log1p_abs)


def d0_profile(F: LiftedPolynomial, rs: Sequence[float], grid: QuadratureGrid | None = None) -> list:
    """``[int log(1 + |F_[r]|) dm for r in rs]`` on one shared grid."""
    rs = list(rs)
    if any(b < a for a, b in zip(rs, rs[1:])):
        raise DomainError("radii must be sorted ascending")
    grid = grid or grid_for(F)
    return [haar_integral(radial_dilate(F, r), grid, log1p_abs) for r in rs]


def metric_p(F: LiftedPolynomial, p: float, grid: QuadratureGrid | None = None) -> float:
    """``(int |F|^p dm)^(1/p)``."""
    if not p > 0:
        raise DomainError(f"p must be positive, got {p}")
    if grid is None:
        k = F.max_var
        grid = auto_grid(k, int(math.ceil(max(p, 2) / 2)) * 2 * max(F.axis_degrees(k), default=0) + 1)
    return haar_integral(F, grid, abs_power(p)) ** (1.0 / p)


def log_modulus_integral(F, grid: QuadratureGrid | None = None) -> MetricReport:
    """Haar mean of ``log|F|``.

    Polynomials go through the iterated Jensen formula of
    :mod:`bohrszego.logmean`; ``grid`` then only fixes the node count of its
    quadrature levels.  Callables are sampled with ``log|F|`` clamped at
    1e-14 on ``grid`` and on a grid with twice as many nodes per axis (plus
    one, to stay odd); the finer value is returned and the difference is
    the error estimate.
    """
    if isinstance(F, LiftedPolynomial):
        if len(F) == 0:
            raise DomainError("log|F| is not integrable for the zero polynomial")
        res = poisson_log_mean(F, (), nodes=grid.nodes_per_axis if grid else None)
        return MetricReport(res["value"], res["error"], f"iterated Jensen N={res['nodes']}")
    if grid is None:
        raise DomainError("a grid is required for callables")
    coarse = haar_integral(F, grid, log_abs)
    try:
        fine_grid = QuadratureGrid(grid.k, 2 * grid.nodes_per_axis + 1)
    except ResourceError:
        return MetricReport(coarse, math.inf, grid.describe(), converged=False)
    fine = haar_integral(F, fine_grid, log_abs)
    return MetricReport(
        fine, abs(fine - coarse), f"clamped {fine_grid.describe()}",
        history=[(grid.nodes_per_axis, coarse), (fine_grid.nodes_per_axis, fine)],
    )


# Vertical-line means ----------------------------------------------------------

@dataclass(frozen=True)
class LineAverageConfig:
    """Window schedule for ``(1/2T) int_{-T}^{T}``: T doubles from ``T0`` up to ``T_max``.

    ``dt=None`` picks :func:`default_step` for the series being averaged.
    """

    T0: float = 2.0**6
    T_max: float = 2.0**14
    factor: float = 2.0
    dt: float | None = None
    tol: float = 1e-3

    def windows(self) -> list:
        out, T = [], self.T0
        while T <= self.T_max * (1 + 1e-12):
            out.append(T)
            T *= self.factor
        return out


# Golden-ratio scaling keeps the step incommensurate with every period 2pi/ln n,
# so sample phases equidistribute instead of repeating.
_STEP_SCALE = (math.sqrt(5.0) - 1.0) / 2.0


def default_step(f: DirichletSeries) -> float:
    """``0.618 * pi / (4 ln n_max)``: at least 8 samples per period of the top frequency."""
    top = math.log(max(f.max_index, 2))
    return _STEP_SCALE * math.pi / (4.0 * top)


def window_mean(f: DirichletSeries, sigma: float, T: float, dt: float, transform: Callable) -> float:
    """Composite trapezoid mean of ``transform(f(sigma + it))`` over ``[-T, T]``."""
    n = max(int(math.ceil(2 * T / dt)), 2)
    t = np.linspace(-T, T, n + 1)
    y = np.asarray(transform(evaluate_line(f, sigma, t)), dtype=float)
    h = 2 * T / n
    return float((np.sum(y[1:-1]) + 0.5 * (y[0] + y[-1])) * h / (2 * T))


def line_average(f: DirichletSeries, sigma: float, cfg: LineAverageConfig | None = None,
                 transform: Callable = log1p_abs) -> MetricReport:
    """Mean of ``transform(f(sigma + it))`` over ``t`` along a doubling window schedule.

    Stops once two successive windows agree within ``cfg.tol``; otherwise the
    last value is returned with ``converged=False``.  ``history`` holds every
    ``(T, value)`` computed.
    """
    cfg = cfg or LineAverageConfig()
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    dt = cfg.dt or default_step(f)
    windows = cfg.windows()
    if not windows or not 0 < dt < windows[0]:
        raise DomainError(f"need 0 < dt < T0 (dt={dt}, T0={cfg.T0})")
    history = []
    gap = math.inf
    for T in windows:
        value = window_mean(f, sigma, T, dt, transform)
        if history:
            gap = abs(value - history[-1][1])
        history.append((T, value))
        if gap < cfg.tol:
            break
    return MetricReport(history[-1][1], gap, f"line sigma={sigma} dt={dt:.6g}", gap < cfg.tol, history)


def sigma_profile(f: DirichletSeries, sigmas: Sequence[float], grid: QuadratureGrid | None = None) -> list:
    """``||f_sigma||_0`` for each sigma, via the lift of the translate."""
    F = lift(f)
    grid = grid or grid_for(F)
    return [metric_d0(lift(vertical_shift(f, s)), grid) for s in sigmas]


def abschnitt_profile(f: DirichletSeries, sigma: float, ks: Sequence[int],
                      grid: QuadratureGrid | None = None) -> list:
    """``int log(1 + |B_k f_sigma|) dm`` for each k.

    All truncations are integrated on the grid of the full lift, so the values
    differ only through the integrand.
    """
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    shifted = lift(vertical_shift(f, sigma))
    grid = grid or grid_for(shifted)
    return [metric_d0(abschnitt(shifted, k), grid) for k in ks]


def write_profile_csv(rows, stream) -> None:
    """Rows of ``(parameter, value, error)`` with a header, 17 significant digits."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["parameter", "value", "error"])
    for param, value, err in rows:
        w.writerow([f"{param:.17g}", f"{value:.17g}", f"{err:.17g}"])
