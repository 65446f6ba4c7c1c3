"""Prime table with on-demand growth, plus 64-bit primality tests.

The table is shared process-wide and guarded by a lock; it only ever grows.
"""
import threading
from math import gcd, isqrt

import numpy as np

UINT64_LIMIT = 1 << 63

_lock = threading.Lock()
_primes = np.array([2, 3, 5, 7, 11, 13], dtype=np.int64)
_sieved_to = 13


def _sieve(limit):
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, isqrt(limit) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _grow(limit):
    global _primes, _sieved_to
    with _lock:
        if limit <= _sieved_to:
            return
        new_limit = max(limit, 2 * _sieved_to)
        _primes = _sieve(new_limit)
        _sieved_to = new_limit


def primes_up_to(limit):
    """Return all primes ``<= limit`` as an int64 array."""
    if limit > _sieved_to:
        _grow(limit)
    table = _primes
    return table[: np.searchsorted(table, limit, side="right")]


def nth_prime(j):
    """The j-th prime, 1-based (``nth_prime(1) == 2``)."""
    if j < 1:
        raise ValueError(f"prime position must be >= 1, got {j}")
    while len(_primes) < j:
        _grow(2 * _sieved_to)
    return int(_primes[j - 1])


def prime_index(p):
    """Inverse of :func:`nth_prime`; raises ValueError if ``p`` is not prime."""
    table = primes_up_to(p)
    if len(table) == 0 or table[-1] != p:
        raise ValueError(f"{p} is not prime")
    return len(table)


# Witnesses 2..37 are deterministic for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n):
    """Deterministic Miller-Rabin for ``n < 2**64``."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n):
    """Smallest prime strictly greater than ``n``."""
    m = n + 1
    if m <= 2:
        return 2
    if m % 2 == 0:
        m += 1
    while not is_prime(m):
        m += 2
    return m


# Positions of primes beyond this bound come from prime_pi instead of the table.
TABLE_LIMIT = 10_000_000
PRIME_PI_LIMIT = 10**12


def prime_pi(x):
    """Number of primes ``<= x`` (Lucy Hedgehog recursion, vectorised)."""
    if x < 2:
        return 0
    if x <= TABLE_LIMIT:
        return len(primes_up_to(x))
    if x > PRIME_PI_LIMIT:
        raise OverflowError(f"prime counting above {PRIME_PI_LIMIT} is not supported (x={x})")
    r = isqrt(x)
    # small[v] = S(v) for v <= r; large[i] = S(x // i) for 1 <= i <= r
    small = np.arange(-1, r, dtype=np.int64)
    small[0] = 0
    idx = np.arange(1, r + 1, dtype=np.int64)
    large = np.zeros(r + 1, dtype=np.int64)
    large[1:] = x // idx - 1
    for p in range(2, r + 1):
        if small[p] == small[p - 1]:
            continue
        sp = small[p - 1]
        p2 = p * p
        # large entries with x // i >= p2
        imax = min(r, x // p2)
        i = np.arange(1, imax + 1, dtype=np.int64)
        ip = i * p
        in_large = ip <= r
        sub = np.empty(imax, dtype=np.int64)
        sub[in_large] = large[ip[in_large]]
        sub[~in_large] = small[x // ip[~in_large]]
        large[1 : imax + 1] -= sub - sp
        if p2 <= r:
            v = np.arange(r, p2 - 1, -1, dtype=np.int64)
            small[v] -= small[v // p] - sp
    return int(large[1])


def prime_position(p):
    """1-based index j with ``nth_prime(j) == p``."""
    if p <= TABLE_LIMIT:
        return prime_index(p)
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    return prime_pi(p)


# Largest prime position served by growing the sieve (p_j is about 9.3e7).
MAX_POSITION = 5_000_000


def prime_at(j):
    """Inverse of :func:`prime_position`."""
    if j > MAX_POSITION:
        raise OverflowError(f"prime position {j} exceeds the supported table ({MAX_POSITION})")
    return nth_prime(j)


def _pollard_rho(n):
    if n % 2 == 0:
        return 2
    c = 1
    while True:
        x = y = 2
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = gcd(abs(x - y), n)
        if d != n:
            return d
        c += 1


def prime_factors(n):
    """Prime factorisation of ``n >= 1`` as a sorted dict ``{p: exponent}``."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out = {}
    for p in _TRIAL:
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out[p] = e
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if is_prime(m):
            out[m] = out.get(m, 0) + 1
        else:
            d = _pollard_rho(m)
            stack.extend((d, m // d))
    return dict(sorted(out.items()))


_TRIAL = [int(p) for p in primes_up_to(1000)]
