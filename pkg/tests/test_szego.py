import json
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from bohrszego import szego
from bohrszego.bohr import LiftedPolynomial
from bohrszego.errors import DegenerateWeightError, DomainError, NotOuterError, ResourceError
from bohrszego.torus import QuadratureGrid

from helpers import random_poly

z1, z2 = LiftedPolynomial.variable(1), LiftedPolynomial.variable(2)
ONE = LiftedPolynomial.constant(1)
ONE_PLUS_COS = szego.FourierTable({(): 1.0, (1,): 0.5, (-1,): 0.5})


def toeplitz_ratio(symbol: dict, d: int) -> float:
    """``det T_{d+1} / det T_d`` for the Toeplitz matrices of a 1-D symbol."""
    col = [symbol.get(j, 0.0) for j in range(d + 1)]
    row = [symbol.get(-j, 0.0) for j in range(d + 1)]
    T = scipy.linalg.toeplitz(col, row)
    return float(np.real(np.linalg.det(T) / np.linalg.det(T[:-1, :-1])))


def brute_force_p2(K_vals: np.ndarray, exps: list, N: int) -> float:
    """Weighted least squares ``min ||sqrt(K)(1 - q)||^2`` straight from the sample points."""
    k = K_vals.ndim
    theta = np.meshgrid(*([2 * np.pi * np.arange(N) / N] * k), indexing="ij")
    cols = [np.exp(1j * sum(e * t for e, t in zip(ex, theta))).ravel() for ex in exps]
    w = np.sqrt(K_vals.ravel())
    M = np.stack(cols, axis=1) * w[:, None]
    c, *_ = np.linalg.lstsq(M, w.astype(complex), rcond=None)
    r = w - M @ c
    return float(np.vdot(r, r).real) / K_vals.size


class TestWeights:
    def test_fourier_examples(self):
        assert szego.fourier_coeff(ONE_PLUS_COS, (1,)) == pytest.approx(0.5)
        assert szego.fourier_coeff(ONE_PLUS_COS, (2,)) == 0
        K = szego.ModulusPower(ONE + z1, 2)
        assert szego.fourier_coeff(K, (0,)) == pytest.approx(2.0)
        assert szego.fourier_coeff(K, (-1,)) == pytest.approx(1.0)

    def test_hermitian_symmetry(self, rng):
        h = random_poly(rng, 2, 3)
        K = szego.ModulusPower(h, 2)
        grid = K.default_grid(0)
        for alpha in [(1, 0), (2, -1), (0, 3), (-3, 2)]:
            a = szego.fourier_coeff(K, alpha, grid)
            b = szego.fourier_coeff(K, tuple(-x for x in alpha), grid)
            assert abs(a - b.conjugate()) <= 1e-12

    def test_table_validation(self):
        with pytest.raises(DomainError):
            szego.FourierTable({(): 1.0, (1,): 0.5})
        with pytest.raises(DomainError):
            szego.FourierTable({(): -1.0})
        with pytest.raises(ResourceError):
            ONE_PLUS_COS.fourier_array(QuadratureGrid(1, 1))

    def test_table_matches_polynomial(self):
        K = szego.FourierTable({(): 2.5, (1, -1): 1j, (-1, 1): -1j})
        grid = QuadratureGrid(2, 7)
        h = K.as_polynomial()
        assert np.allclose(np.abs(szego.grid_values(h, grid)), K.values(grid), atol=1e-13)
        assert K.log_integral() == pytest.approx(
            szego.poisson_log_mean(h)["value"], abs=1e-14)

    def test_json_round_trip(self):
        for K in (ONE_PLUS_COS, szego.ModulusPower(ONE - 0.5 * z2, 3.0)):
            again = szego.weight_from_json(json.loads(json.dumps(K.to_json())))
            assert again == K
        with pytest.raises(DomainError):
            szego.weight_from_json({"type": "bogus"})


class TestLowerBound:
    def test_examples(self):
        assert szego.lower_bound(szego.FourierTable({(): 1.0})).value == 1.0
        assert szego.lower_bound(szego.ModulusPower(ONE - 0.5 * z1, 2)).value == pytest.approx(1.0, abs=1e-14)
        assert szego.lower_bound(ONE_PLUS_COS).value == pytest.approx(0.5, abs=1e-7)
        # |w - 1/2| = |1 - w/2| on the circle, so the inner factor does not move the bound.
        assert szego.lower_bound(szego.ModulusPower(z1 - 0.5, 2)).value == pytest.approx(1.0, abs=1e-14)
        assert szego.lower_bound(szego.ModulusPower(z1 - 2.0, 2)).value == pytest.approx(4.0, abs=1e-13)


class TestIndexSet:
    def test_examples(self):
        A = szego.build_index_set(2, 2)
        assert [a.to_dense(2) for a in A] == [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        assert [a.to_dense(1) for a in szego.build_index_set(1, 3)] == [(1,), (2,), (3,)]
        with pytest.raises(DomainError):
            szego.build_index_set(0, 2)

    @pytest.mark.parametrize("k,d", [(1, 5), (2, 4), (3, 3), (4, 2)])
    def test_size(self, k, d):
        A = szego.build_index_set(k, d)
        assert len(A) == math.comb(k + d, d) - 1 == len(set(A))


class TestP2:
    @pytest.mark.parametrize("d", [1, 2, 5, 10])
    def test_toeplitz_oracle(self, d):
        res = szego.szego_p2(szego.ModulusPower(ONE - 0.5 * z1, 2), szego.build_index_set(1, d))
        assert res.value == pytest.approx(toeplitz_ratio({0: 1.25, 1: -0.5, -1: -0.5}, d), abs=1e-13)
        res = szego.szego_p2(ONE_PLUS_COS, szego.build_index_set(1, d))
        assert res.value == pytest.approx(0.5 * (d + 2) / (d + 1), abs=1e-13)
        assert res.in_sandwich()

    def test_two_variable_least_squares(self, rng):
        h = ONE + 0.3 * z1 - 0.2j * z2 + 0.15 * z1 * z2
        K = szego.ModulusPower(h, 2)
        A = szego.build_index_set(2, 3)
        res = szego.szego_p2(K, A)
        N = 15
        vals = K.values(QuadratureGrid(2, N))
        assert res.value == pytest.approx(brute_force_p2(vals, [a.to_dense(2) for a in A], N), abs=1e-12)

    def test_degenerate_weight(self):
        # 1 + 2 cos is negative on part of the circle: its Toeplitz forms are indefinite.
        K = szego.FourierTable({(): 1.0, (1,): 1.0, (-1,): 1.0})
        with pytest.raises(DegenerateWeightError):
            szego.szego_p2(K, szego.build_index_set(1, 4))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
    def test_scale_covariance(self, seed, lam):
        rng = np.random.default_rng(seed)
        K = szego.ModulusPower(random_poly(rng, 2, 2), 2)
        A = szego.build_index_set(2, 2)
        a = szego.szego_p2(K.scaled(lam), A).value
        b = lam * szego.szego_p2(K, A).value
        assert a == pytest.approx(b, rel=1e-10)

    def test_ladder_non_increasing(self, rng):
        K = szego.ModulusPower(random_poly(rng, 2, 2), 2)
        vals = [r.value for r in szego.szego_ladder(K, szego.SzegoConfig(2, 2, 1), [1, 2, 3, 4])]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_result_json(self):
        res = szego.szego_p2(ONE_PLUS_COS, szego.build_index_set(1, 2))
        out = json.loads(json.dumps(res.to_json()))
        assert out["S"] == res.value and out["upper"] == 1.0
        assert out["coeffs"][0]["alpha"] == [[1, 1]]


class TestGeneralP:
    def test_matches_p2(self):
        K = szego.ModulusPower(ONE + 0.4 * z1 + 0.3j * z2, 2)
        cfg = szego.SzegoConfig(2.0, 2, 2)
        exact = szego.szego_p2(K, szego.build_index_set(2, 2), cfg.grid(K))
        res = szego.szego_general(K, cfg, cold=True)
        assert res.converged
        assert res.value == pytest.approx(exact.value, abs=1e-10)

    def test_p4_degree_ten(self):
        # |1 - z/2|^4 is outer with log integral 0, so S_d decreases to 1.
        K = szego.ModulusPower(ONE - 0.5 * z1, 4)
        res = szego.szego_general(K, szego.SzegoConfig(4.0, 1, 10))
        assert res.converged
        assert abs(res.value - 1.0) <= 1e-3
        assert res.in_sandwich(1e-8)

    def test_gradient_finite_difference(self, rng):
        K = szego.ModulusPower(ONE + 0.5 * z1 - 0.25 * z2, 3.0)
        A = szego.build_index_set(2, 2)
        obj = szego.SmoothedObjective(K, A, szego.SzegoConfig(3.0, 2, 2).grid(K), 3.0)
        c = 0.1 * (rng.normal(size=len(A)) + 1j * rng.normal(size=len(A)))
        _, g = obj.value_and_grad(c, 1e-3)
        h = 1e-6
        for _ in range(5):
            v = rng.normal(size=len(A)) + 1j * rng.normal(size=len(A))
            fd = (obj.value(c + h * v, 1e-3) - obj.value(c - h * v, 1e-3)) / (2 * h)
            assert fd == pytest.approx(float(np.real(np.vdot(g, v))), rel=1e-6, abs=1e-9)

    def test_p_validation(self):
        with pytest.raises(DomainError):
            szego.SzegoConfig(p=1.0)
        with pytest.raises(DomainError):
            szego.SzegoConfig(d=3, nodes=5).grid(ONE_PLUS_COS)


class TestCertificates:
    def test_lower_attainment(self):
        rep = szego.certify_lower_attainment(ONE - 0.5 * z1, 2.0, szego.SzegoConfig(), [1, 2, 4, 8, 12])
        assert rep["passed"] and rep["monotone"]
        assert rep["ladder"][-1]["gap"] <= 1e-5

    def test_not_outer(self):
        with pytest.raises(NotOuterError) as info:
            szego.certify_lower_attainment(z1 - 0.5, 2.0, szego.SzegoConfig(), [1, 2])
        assert info.value.report["outer"] is False

    def test_upper_vanishing(self):
        K = szego.FourierTable({(): 2.0, (3,): 1.0, (-3,): 1.0})
        rep = szego.certify_upper(K, 1, 2)
        assert rep["vanishing"] and rep["passed"] and rep["S"] == pytest.approx(2.0)

    def test_upper_nonvanishing(self):
        rep = szego.certify_upper(ONE_PLUS_COS, 1, 3)
        assert not rep["vanishing"] and rep["passed"]
        assert rep["margin"] == pytest.approx(0.25)
        assert rep["S"] <= 1.0 - 0.25
