"""A Dirichlet series whose lift diverges at a point of the l^1 polydisk.

Choose primes ``q_1 = 2`` and ``q_{j+1}`` the least prime above ``2 q_j``,
and let ``f(s) = sum_j log(q_j) q_j^{-s}``.  Each vertical translate
``f_sigma`` with sigma > 0 has summable coefficients, yet the lift
``sum_j log(q_j) z_{pos(q_j)}`` has coefficients growing like ``j log 2``.
Putting ``z = 1/m^2`` on the first variable whose coefficient reaches
``m^2`` (and 0 elsewhere) gives a point of ``l^1`` at which infinitely many
terms are at least 1, so the series cannot converge there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import primes
from .errors import DomainError

MAX_TERMS = 40
SIGMAS = (0.5, 0.25, 0.1)
# Variable positions need pi(q), which costs seconds past this size.
POSITION_LIMIT = 10**10


def doubling_primes(J: int) -> list:
    """``[q_1, ..., q_J]`` with ``q_1 = 2`` and ``q_{j+1}`` the least prime > ``2 q_j``."""
    if not 1 <= J <= MAX_TERMS:
        raise DomainError(f"J must lie in 1..{MAX_TERMS}, got {J}")
    out = [2]
    while len(out) < J:
        out.append(primes.next_prime(2 * out[-1]))
    return out


@dataclass
class WitnessReport:
    primes: list
    positions: list
    coefficients: list
    damped: dict
    damped_bounds: dict
    witness: list

    @property
    def passed(self) -> bool:
        increasing = all(b > a for a, b in zip(self.coefficients, self.coefficients[1:]))
        doubling = all(b > 2 * a for a, b in zip(self.primes, self.primes[1:]))
        # log q_j >= (j - 1) log 2 because q_j > 2^(j - 1).
        unbounded = all(c >= j * math.log(2) for j, c in enumerate(self.coefficients))
        finite = all(math.isfinite(v) for v in self.damped.values())
        return increasing and doubling and unbounded and finite

    def to_json(self) -> dict:
        return {
            "primes": self.primes,
            "positions": self.positions,
            "coefficients": self.coefficients,
            "growth_bound": "log q_j >= (j - 1) log 2",
            "damped_sums": {f"{s:g}": v for s, v in self.damped.items()},
            "damped_bounds": {f"{s:g}": v for s, v in self.damped_bounds.items()},
            "witness_point": self.witness,
            "passed": self.passed,
        }


def divergence_witness(J: int, sigmas=SIGMAS) -> WitnessReport:
    """Build the first J terms and the certificate.

    ``damped[sigma]`` is ``sum_{j<=J} log(q_j) q_j^{-2 sigma}``.  Because
    ``q_j > 2^{j-1}``, the infinite sum is at most
    ``M_sigma sum_j 2^{-(j-1) sigma}`` with ``M_sigma = max_x log(x) x^{-sigma}
    = 1/(e sigma)``; that bound is reported next to each partial sum.
    """
    qs = doubling_primes(J)
    coeffs = [math.log(q) for q in qs]
    positions = [primes.prime_position(q) if q <= POSITION_LIMIT else None for q in qs]
    damped, bounds = {}, {}
    for s in sigmas:
        if not s > 0:
            raise DomainError(f"damping exponent must be positive, got {s}")
        damped[s] = math.fsum(c * math.exp(-2 * s * c) for c in coeffs)
        # log(x) x^(-2s) = log(x) x^(-s) * x^(-s) <= M_s x^(-s), and x^(-s) < 2^(-(j-1) s).
        m_s = 1.0 / (math.e * s)
        bounds[s] = m_s / (1.0 - 2.0 ** (-s))
    witness = []
    m = 2
    for q, pos, c in zip(qs, positions, coeffs):
        if c >= m * m:
            witness.append({"prime": q, "position": pos, "value": 1.0 / (m * m), "term": c / (m * m)})
            m += 1
    return WitnessReport(qs, positions, coeffs, damped, bounds, witness)
