"""Random generators shared by the test modules."""
import itertools

from bohrszego.bohr import DirichletSeries, LiftedPolynomial, MultiIndex


def random_poly(rng, k, deg, density=0.6, constant=True, gaussian_int=False):
    """Random polynomial in k variables with total degree <= deg."""
    mons = {}
    for e in itertools.product(range(deg + 1), repeat=k):
        if 0 < sum(e) <= deg and rng.random() < density:
            if gaussian_int:
                c = complex(int(rng.integers(-5, 6)), int(rng.integers(-5, 6)))
            else:
                c = complex(rng.normal(), rng.normal())
            mons[MultiIndex.from_dense(e)] = c
    if constant:
        mons[MultiIndex()] = complex(rng.normal(), rng.normal()) if not gaussian_int else 1 + 0j
    return LiftedPolynomial(mons)


def smooth_numbers(limit, primes=(2, 3, 5)):
    """All n <= limit whose prime factors lie in ``primes``."""
    out = [1]
    for p in primes:
        out = sorted({m * p**e for m in out for e in range(64) if m * p**e <= limit})
    return out


def random_smooth_series(rng, terms, limit=60, primes=(2, 3, 5)):
    pool = smooth_numbers(limit, primes)
    ns = rng.choice(pool, size=min(terms, len(pool)), replace=False)
    return DirichletSeries({int(n): complex(rng.normal(), rng.normal()) for n in ns})
