import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bohrszego import bohr
from bohrszego.bohr import DirichletSeries, LiftedPolynomial, MultiIndex
from bohrszego.errors import DomainError, IndexOverflowError


def M(*pairs):
    return MultiIndex(pairs)


class TestMultiIndex:
    def test_validation(self):
        with pytest.raises(DomainError):
            MultiIndex(((2, 1), (1, 1)))
        with pytest.raises(DomainError):
            MultiIndex(((1, 0),))
        with pytest.raises(DomainError):
            MultiIndex(((0, 1),))

    def test_degrees(self):
        a = M((1, 2), (3, 1))
        assert a.degree == 3
        assert a.weighted_degree == 1 * 2 + 3 * 1
        assert a.max_var == 3
        assert a.to_dense(4) == (2, 0, 1, 0)
        assert MultiIndex.from_dense((2, 0, 1)) == a

    def test_add(self):
        assert M((1, 1)) + M((1, 2), (2, 1)) == M((1, 3), (2, 1))


class TestFactorize:
    @pytest.mark.parametrize("n,alpha", [(1, M()), (12, M((1, 2), (2, 1))), (5, M((3, 1)))])
    def test_examples(self, n, alpha):
        assert bohr.factorize(n) == alpha

    def test_domain(self):
        with pytest.raises(DomainError):
            bohr.factorize(0)
        with pytest.raises(IndexOverflowError):
            bohr.factorize(1 << 63)

    def test_large_prime_position(self):
        # 2^61 - 1 is prime, far past the table; its position needs prime counting.
        with pytest.raises(OverflowError):
            bohr.factorize(2**61 - 1)
        assert bohr.factorize(2 * 9999991) == M((1, 1), (664579, 1))

    @settings(max_examples=300, deadline=None)
    @given(st.integers(1, 10**6), st.integers(1, 10**6))
    def test_additivity(self, m, n):
        assert bohr.factorize(m * n) == bohr.factorize(m) + bohr.factorize(n)


class TestIndexOf:
    @pytest.mark.parametrize("alpha,n", [(M(), 1), (M((1, 2), (2, 1)), 12), (M((25, 1)), 97)])
    def test_examples(self, alpha, n):
        assert bohr.index_of(alpha) == n

    def test_overflow(self):
        with pytest.raises(IndexOverflowError):
            bohr.index_of(M((1, 63)))
        assert bohr.index_of(M((1, 62))) == 2**62

    @settings(max_examples=300, deadline=None)
    @given(st.integers(1, (1 << 63) - 1).filter(lambda n: max(bohr.primes.prime_factors(n)) < 10**7 if n > 1 else True))
    def test_round_trip_64_bit(self, n):
        assert bohr.index_of(bohr.factorize(n)) == n


class TestLift:
    def test_example(self):
        Q = DirichletSeries({1: 1, 2: -2, 6: 3})
        F = bohr.lift(Q)
        z1, z2 = LiftedPolynomial.variable(1), LiftedPolynomial.variable(2)
        assert F == 1 - 2 * z1 + 3 * z1 * z2
        assert bohr.unlift(F) == Q

    def test_empty_and_single_terms(self):
        assert bohr.lift(DirichletSeries()) == LiftedPolynomial()
        assert bohr.lift(DirichletSeries({9: 7})) == LiftedPolynomial({M((2, 2)): 7})
        assert bohr.unlift(LiftedPolynomial({M((3, 1)): 2})) == DirichletSeries({5: 2})
        assert bohr.unlift(LiftedPolynomial({M((1, 1), (2, 1)): 1})) == DirichletSeries({6: 1})

    def test_zero_coefficients_dropped(self):
        assert DirichletSeries({1: 0, 2: 1}) == DirichletSeries({2: 1})
        assert len(LiftedPolynomial({M(): 0})) == 0

    @settings(max_examples=100, deadline=None)
    @given(st.dictionaries(st.integers(1, 10**6), st.complex_numbers(allow_nan=False, allow_infinity=False, max_magnitude=1e6), max_size=20))
    def test_round_trip(self, terms):
        Q = DirichletSeries(terms)
        assert bohr.unlift(bohr.lift(Q)) == Q
        F = bohr.lift(Q)
        assert bohr.lift(bohr.unlift(F)) == F


class TestMultiply:
    def test_examples(self):
        assert bohr.multiply(DirichletSeries({2: 1}), DirichletSeries({3: 1})) == DirichletSeries({6: 1})
        f = DirichletSeries({1: 1, 2: 1})
        assert bohr.multiply(f, DirichletSeries({1: 1})) == f
        assert bohr.multiply(f, f) == DirichletSeries({1: 1, 2: 2, 4: 1})

    def test_overflow(self):
        big = DirichletSeries({2**40: 1})
        with pytest.raises(IndexOverflowError):
            bohr.multiply(big, DirichletSeries({2**23: 1}))

    @settings(max_examples=100, deadline=None)
    @given(st.dictionaries(st.integers(1, 2000), st.integers(-9, 9), max_size=8),
           st.dictionaries(st.integers(1, 2000), st.integers(-9, 9), max_size=8))
    def test_homomorphism(self, a, b):
        f, g = DirichletSeries(a), DirichletSeries(b)
        assert bohr.lift(bohr.multiply(f, g)) == bohr.lift(f) * bohr.lift(g)


class TestAbschnitt:
    def test_examples(self):
        z1, z2 = LiftedPolynomial.variable(1), LiftedPolynomial.variable(2)
        F = 1 - 2 * z1 + 3 * z1 * z2
        assert bohr.abschnitt(F, 1) == 1 - 2 * z1
        assert bohr.abschnitt(F, 0) == LiftedPolynomial.constant(1)
        assert bohr.abschnitt(DirichletSeries({2: 1, 5: 1}), 2) == DirichletSeries({2: 1})
        assert bohr.abschnitt(F, 5) == F
        assert bohr.abschnitt(bohr.abschnitt(F, 1), 1) == bohr.abschnitt(F, 1)

    def test_semigroup(self):
        assert bohr.in_semigroup(2**5 * 3**2, 2)
        assert not bohr.in_semigroup(10, 2)


class TestShiftAndEvaluate:
    def test_shift_examples(self):
        assert bohr.vertical_shift(DirichletSeries({2: 1}), 1.0) == DirichletSeries({2: 0.5})
        f = DirichletSeries({6: 3})
        shifted = bohr.vertical_shift(f, math.log(2) / math.log(6))
        assert shifted.terms[6] == pytest.approx(1.5, rel=1e-15)
        assert bohr.vertical_shift(f, 0.0) == f

    def test_shift_composes(self, rng):
        f = DirichletSeries({int(n): complex(rng.normal(), rng.normal()) for n in rng.integers(1, 10**4, 30)})
        a = bohr.vertical_shift(bohr.vertical_shift(f, 0.3), 0.45)
        b = bohr.vertical_shift(f, 0.75)
        for n, c in b:
            assert abs(a.terms[n] - c) <= 1e-14 * abs(c)

    def test_evaluate_examples(self):
        z1, z2 = LiftedPolynomial.variable(1), LiftedPolynomial.variable(2)
        assert bohr.evaluate_lift(1 - 2 * z1, [0]) == 1
        assert bohr.evaluate_lift(z1 * z2, [0.5, 1 / 3]) == pytest.approx(1 / 6)
        assert bohr.evaluate_line(DirichletSeries({1: 1, 2: 1}), 0.0, 0.0) == 2
        t = 1.7
        assert bohr.evaluate_line(DirichletSeries({2: 1}), 0.0, t) == pytest.approx(cmath.exp(-1j * t * math.log(2)))

    def test_line_matches_lift(self, rng):
        ns = rng.integers(1, 10**4, 40)
        Q = DirichletSeries({int(n): complex(rng.normal(), rng.normal()) for n in ns})
        F = bohr.lift(Q)
        for sigma, t in [(0.0, 0.0), (0.3, 12.5), (1.1, -301.25)]:
            point = bohr.dirichlet_point(F.max_var, sigma, t)
            a = bohr.evaluate_line(Q, sigma, t)
            b = bohr.evaluate_lift(F, point)
            scale = sum(abs(c) for _, c in Q)
            assert abs(a - b) <= 1e-12 * scale


class TestJson:
    def test_round_trip(self):
        Q = DirichletSeries({1: 1, 2: -2 + 0.5j, 6: 3})
        assert bohr.series_from_json(bohr.series_to_json(Q)) == Q
        F = bohr.lift(Q)
        assert bohr.poly_from_json(bohr.poly_to_json(F)) == F
        assert bohr.poly_to_json(F)["monomials"][2]["alpha"] == [[1, 1], [2, 1]]

    def test_malformed(self):
        with pytest.raises(DomainError):
            bohr.series_from_json({"nope": []})
        with pytest.raises(DomainError):
            bohr.poly_from_json({"monomials": [{"re": 1}]})


@pytest.mark.parametrize("n", [1, 2, 97, 2**62, 3**39, 999983 * 999979])
def test_round_trip_edges(n):
    assert bohr.index_of(bohr.factorize(n)) == n


def test_vectorised_round_trip_block():
    ns = np.arange(1, 20001)
    assert all(bohr.index_of(bohr.factorize(int(n))) == n for n in ns)
