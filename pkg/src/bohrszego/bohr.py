"""Dirichlet polynomials, their Bohr lifts, and exact index arithmetic.

An integer ``n = p_1^a_1 ... p_k^a_k`` is identified with the multi-index
``((1, a_1), ..., (k, a_k))`` (zero exponents dropped), and the Dirichlet
term ``a_n n^{-s}`` with the monomial ``a_n z^alpha(n)``.  Every map here is
exact: coefficients are carried over unchanged, and integer reconstruction
is checked against the signed 64-bit range.
"""
from __future__ import annotations

import math
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from . import primes
from .errors import DomainError, IndexOverflowError

INDEX_LIMIT = 1 << 63


class MultiIndex(tuple):
    """Finitely supported exponent sequence as sorted ``(position, exponent)`` pairs.

    Positions are 1-based prime indices, strictly increasing; exponents are
    positive.  The empty tuple is the zero index.  Ordering is the tuple
    ordering, i.e. lexicographic on ``(position, exponent)``.
    """

    __slots__ = ()

    def __new__(cls, entries: Iterable = ()):
        pairs = tuple((int(j), int(e)) for j, e in entries)
        last = 0
        for j, e in pairs:
            if j <= last:
                raise DomainError(f"positions must be strictly increasing and >= 1: {pairs}")
            if e < 1:
                raise DomainError(f"exponents must be >= 1: {pairs}")
            last = j
        return tuple.__new__(cls, pairs)

    @classmethod
    def _trusted(cls, pairs):
        return tuple.__new__(cls, pairs)

    @classmethod
    def from_dense(cls, exponents: Iterable[int]) -> "MultiIndex":
        """Build from ``(alpha_1, alpha_2, ...)``; zeros are skipped."""
        return cls((j, e) for j, e in enumerate(exponents, start=1) if e)

    def to_dense(self, k: int) -> tuple:
        out = [0] * k
        for j, e in self:
            if j > k:
                raise DomainError(f"index {self!r} uses variable {j} > {k}")
            out[j - 1] = e
        return tuple(out)

    @property
    def degree(self) -> int:
        """Total degree ``sum_j alpha_j``."""
        return sum(e for _, e in self)

    @property
    def weighted_degree(self) -> int:
        """``sum_j j * alpha_j``, the exponent picked up under radial dilation."""
        return sum(j * e for j, e in self)

    @property
    def max_var(self) -> int:
        return self[-1][0] if self else 0

    def __add__(self, other):
        if not isinstance(other, MultiIndex):
            return NotImplemented
        merged = dict(self)
        for j, e in other:
            merged[j] = merged.get(j, 0) + e
        return MultiIndex._trusted(tuple(sorted(merged.items())))

    def __repr__(self):
        if not self:
            return "MultiIndex(0)"
        return "MultiIndex(" + " ".join(f"z{j}^{e}" if e > 1 else f"z{j}" for j, e in self) + ")"


ZERO = MultiIndex()


# Smallest-prime-factor table for fast factorisation of small n.
_SPF_LIMIT = 1 << 21
_spf = None
_pos = None
_plist = None


def _small_tables():
    global _spf, _pos, _plist
    if _spf is None:
        spf = np.zeros(_SPF_LIMIT + 1, dtype=np.int64)
        ps = primes.primes_up_to(_SPF_LIMIT)
        for p in ps[::-1]:
            spf[p::p] = p
        pos = np.zeros(_SPF_LIMIT + 1, dtype=np.int64)
        pos[ps] = np.arange(1, len(ps) + 1)
        _pos = pos.tolist()
        _plist = [0] + ps.tolist()
        _spf = spf.tolist()
    return _spf, _pos


def factorize(n: int) -> MultiIndex:
    """Exponent multi-index alpha(n) of the prime factorisation of ``n``."""
    n = int(n)
    if n < 1:
        raise DomainError(f"factorize needs n >= 1, got {n}")
    if n >= INDEX_LIMIT:
        raise IndexOverflowError(f"{n} does not fit in a signed 64-bit index")
    if n <= _SPF_LIMIT:
        spf, pos = _small_tables()
        pairs = []
        while n > 1:
            p = spf[n]
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            pairs.append((pos[p], e))
        return MultiIndex._trusted(tuple(pairs))
    return MultiIndex._trusted(
        tuple((primes.prime_position(p), e) for p, e in primes.prime_factors(n).items())
    )


def index_of(alpha: MultiIndex) -> int:
    """The integer ``prod p_j^alpha_j``; raises on 64-bit overflow."""
    _small_tables()
    n = 1
    for j, e in alpha:
        n *= (_plist[j] if j < len(_plist) else primes.prime_at(j)) ** e
        if n >= INDEX_LIMIT:
            raise IndexOverflowError(f"index of {alpha!r} exceeds 2^63 - 1")
    return n


class DirichletSeries:
    """Finite Dirichlet series ``sum a_n n^{-s}`` stored sparsely.

    Zero coefficients are dropped on construction, so equality is plain
    map equality.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[int, complex] | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean = {}
        for n, a in items:
            n = int(n)
            if n < 1:
                raise DomainError(f"Dirichlet index must be >= 1, got {n}")
            if n >= INDEX_LIMIT:
                raise IndexOverflowError(f"Dirichlet index {n} does not fit in 64 bits")
            if a != 0:
                clean[n] = clean.get(n, 0) + complex(a)
        self._terms = {n: clean[n] for n in sorted(clean) if clean[n] != 0}

    @property
    def terms(self) -> Mapping[int, complex]:
        return MappingProxyType(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __eq__(self, other):
        if not isinstance(other, DirichletSeries):
            return NotImplemented
        return self._terms == other._terms

    def __repr__(self):
        body = " + ".join(f"({a:g})*{n}^-s" for n, a in self._terms.items())
        return f"DirichletSeries({body or '0'})"

    @property
    def max_index(self) -> int:
        return max(self._terms, default=0)

    def __add__(self, other):
        out = dict(self._terms)
        for n, a in other._terms.items():
            out[n] = out.get(n, 0) + a
        return DirichletSeries(out)

    def __mul__(self, other):
        if isinstance(other, DirichletSeries):
            return multiply(self, other)
        return DirichletSeries({n: a * other for n, a in self._terms.items()})

    __rmul__ = __mul__


class LiftedPolynomial:
    """Polynomial in finitely many of the variables ``z_1, z_2, ...``.

    Stored as a sparse map from :class:`MultiIndex` to complex coefficient.
    """

    __slots__ = ("_monomials",)

    def __init__(self, monomials: Mapping | Iterable = ()):
        items = monomials.items() if isinstance(monomials, Mapping) else monomials
        acc = {}
        for alpha, c in items:
            if not isinstance(alpha, MultiIndex):
                alpha = MultiIndex(alpha)
            acc[alpha] = acc.get(alpha, 0) + complex(c)
        self._monomials = {a: acc[a] for a in sorted(acc) if acc[a] != 0}

    @classmethod
    def constant(cls, c) -> "LiftedPolynomial":
        return cls({ZERO: c})

    @classmethod
    def variable(cls, j: int, c=1.0) -> "LiftedPolynomial":
        return cls({MultiIndex(((j, 1),)): c})

    @property
    def monomials(self) -> Mapping[MultiIndex, complex]:
        return MappingProxyType(self._monomials)

    def __len__(self):
        return len(self._monomials)

    def __iter__(self):
        return iter(self._monomials.items())

    def __eq__(self, other):
        if not isinstance(other, LiftedPolynomial):
            return NotImplemented
        return self._monomials == other._monomials

    def __repr__(self):
        body = " + ".join(f"({c:g})*{a!r}" for a, c in self._monomials.items())
        return f"LiftedPolynomial({body or '0'})"

    def coeff(self, alpha) -> complex:
        return self._monomials.get(alpha, 0j)

    @property
    def constant_term(self) -> complex:
        return self._monomials.get(ZERO, 0j)

    @property
    def max_var(self) -> int:
        return max((a.max_var for a in self._monomials), default=0)

    @property
    def degree(self) -> int:
        return max((a.degree for a in self._monomials), default=0)

    def axis_degrees(self, k: int | None = None) -> tuple:
        """Largest exponent of each of the first ``k`` variables."""
        k = self.max_var if k is None else k
        out = [0] * k
        for alpha in self._monomials:
            for j, e in alpha:
                if j <= k and e > out[j - 1]:
                    out[j - 1] = e
        return tuple(out)

    def __add__(self, other):
        if not isinstance(other, LiftedPolynomial):
            other = LiftedPolynomial.constant(other)
        return LiftedPolynomial(list(self) + list(other))

    __radd__ = __add__

    def __neg__(self):
        return LiftedPolynomial({a: -c for a, c in self})

    def __sub__(self, other):
        if not isinstance(other, LiftedPolynomial):
            other = LiftedPolynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, LiftedPolynomial):
            return LiftedPolynomial({a: c * other for a, c in self})
        acc = {}
        for a, c in self:
            for b, d in other:
                key = a + b
                acc[key] = acc.get(key, 0) + c * d
        return LiftedPolynomial(acc)

    __rmul__ = __mul__

    def __call__(self, zeta):
        return evaluate_lift(self, zeta)


def lift(Q: DirichletSeries) -> LiftedPolynomial:
    """Bohr lift: ``a_n n^{-s} -> a_n z^alpha(n)``."""
    return LiftedPolynomial({factorize(n): a for n, a in Q})


def unlift(F: LiftedPolynomial) -> DirichletSeries:
    """Inverse Bohr lift; raises :class:`IndexOverflowError` past 2^63."""
    return DirichletSeries({index_of(alpha): c for alpha, c in F})


def in_semigroup(n: int, k: int) -> bool:
    """True when every prime factor of ``n`` is among the first ``k`` primes."""
    return factorize(n).max_var <= k


def abschnitt(obj, k: int):
    """Keep only the part depending on the first ``k`` variables.

    Works on both :class:`LiftedPolynomial` and :class:`DirichletSeries`; for
    series this keeps the indices in the semigroup generated by
    ``p_1, ..., p_k``.
    """
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    if isinstance(obj, DirichletSeries):
        return DirichletSeries({n: a for n, a in obj if in_semigroup(n, k)})
    return LiftedPolynomial({a: c for a, c in obj if a.max_var <= k})


def vertical_shift(f: DirichletSeries, sigma: float) -> DirichletSeries:
    """The translate ``f_sigma(s) = f(s + sigma)``: ``a_n -> a_n n^{-sigma}``."""
    if not math.isfinite(sigma):
        raise DomainError(f"shift must be finite, got {sigma}")
    if sigma == 0:
        return f
    return DirichletSeries({n: a * math.exp(-sigma * math.log(n)) for n, a in f})


def evaluate_lift(F: LiftedPolynomial, zeta) -> complex:
    """Evaluate ``sum c_alpha zeta^alpha``; coordinates past ``len(zeta)`` read as 0."""
    zeta = [complex(z) for z in zeta]
    m = len(zeta)
    total = 0j
    for alpha, c in F:
        term = c
        for j, e in alpha:
            if j > m:
                term = 0j
                break
            term *= zeta[j - 1] ** e
        total += term
    return total


def evaluate_line(f: DirichletSeries, sigma: float, t):
    """``f(sigma + i t)``; ``t`` may be a scalar or an array."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for n, a in f:
        ln = math.log(n)
        out += a * math.exp(-sigma * ln) * np.exp(-1j * ln * t)
    return out[()] if out.ndim == 0 else out


def dirichlet_point(k: int, sigma: float, t: float) -> list:
    """The torus/polydisk point ``(p_j^{-sigma - i t})_{j <= k}``."""
    return [
        math.exp(-sigma * math.log(p)) * complex(math.cos(t * math.log(p)), -math.sin(t * math.log(p)))
        for p in (primes.nth_prime(j) for j in range(1, k + 1))
    ]


def multiply(f: DirichletSeries, g: DirichletSeries) -> DirichletSeries:
    """Dirichlet convolution ``(f g)_N = sum_{mn = N} a_m b_n``."""
    acc = {}
    for m, a in f:
        for n, b in g:
            N = m * n
            if N >= INDEX_LIMIT:
                raise IndexOverflowError(f"product index {m}*{n} exceeds 2^63 - 1")
            acc[N] = acc.get(N, 0) + a * b
    return DirichletSeries(acc)


# JSON interchange -------------------------------------------------------------

def series_to_json(f: DirichletSeries) -> dict:
    return {"terms": [{"n": n, "re": a.real, "im": a.imag} for n, a in f]}


def series_from_json(obj: dict) -> DirichletSeries:
    try:
        terms = obj["terms"]
        return DirichletSeries(
            (int(t["n"]), complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))) for t in terms
        )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed series JSON: {exc!r}") from exc


def poly_to_json(F: LiftedPolynomial) -> dict:
    return {
        "monomials": [
            {"alpha": [list(pair) for pair in alpha], "re": c.real, "im": c.imag} for alpha, c in F
        ]
    }


def poly_from_json(obj: dict) -> LiftedPolynomial:
    try:
        mons = obj["monomials"]
        return LiftedPolynomial(
            (MultiIndex(m["alpha"]), complex(float(m.get("re", 0.0)), float(m.get("im", 0.0))))
            for m in mons
        )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed polynomial JSON: {exc!r}") from exc
