import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

import oracles
from gle2bd import (DomainError, MomentPrecisionError, ValidationError, ad_kernel, bessel_j1,
                    block_diag_kernel, chi_closed_form, kernel_from_name, kernel_moments,
                    langevin_kernel, morse_field, morse_force, morse_potential, tabulated_kernel,
                    theta_laplace_ad, theta_laplace_chain, theta_time)
from gle2bd.errors import SimulationError


class TestBesselJ1:
    def test_examples(self):
        assert bessel_j1(0.0) == 0.0
        assert abs(bessel_j1(1e-6) - 5e-7) <= 1e-9 * 5e-7
        assert abs(bessel_j1(1.0) - 0.4400505857) < 1e-10
        assert abs(bessel_j1(5.0) + 0.3275791376) < 1e-10

    def test_against_mpmath(self):
        xs = np.concatenate([np.linspace(0, 30, 601), np.geomspace(30, 1e4, 400),
                             [7.999999, 8.0, 8.000001, 24.99999, 25.0, 25.00001]])
        got = bessel_j1(xs)
        ref = np.array([oracles.j1(x) for x in xs])
        assert np.max(np.abs(got - ref)) <= 1e-10

    @given(st.floats(-1e4, 1e4, allow_nan=False))
    def test_odd(self, x):
        assert bessel_j1(-x) == -bessel_j1(x)

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite(self, bad):
        with pytest.raises(DomainError):
            bessel_j1(bad)


class TestTheta:
    def test_time_examples(self):
        assert theta_time(0.0, 2.0) == pytest.approx(4.0, abs=1e-14)
        assert theta_time(0.25, 2.0) == pytest.approx(8 * oracles.j1(1.0), abs=1e-10)
        assert abs(theta_time(1.3, 1e-9)) < 1e-15
        with pytest.raises(DomainError):
            theta_time(-0.1, 2.0)

    def test_laplace_ad_examples(self):
        assert theta_laplace_ad(0.0, 2.0) == pytest.approx(2.0, abs=1e-15)
        assert theta_laplace_ad(4.0, 2.0) == pytest.approx(2 * (np.sqrt(2) - 1), rel=1e-14)
        assert theta_laplace_ad(1e8, 2.0) == pytest.approx(4e-8, rel=1e-8)
        with pytest.raises(DomainError):
            theta_laplace_ad(-1.0, 2.0)

    def test_laplace_ad_matches_mpmath(self):
        for s in (0.0, 0.1, 1.0, 3.0, 50.0):
            assert theta_laplace_ad(s, 0.7) == pytest.approx(oracles.theta_ad(s, 0.7), rel=1e-13)

    @given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0.05, 10))
    def test_laplace_ad_monotone(self, s1, s2, w):
        lo, hi = sorted((s1, s2))
        assert theta_laplace_ad(hi, w) <= theta_laplace_ad(lo, w) + 1e-15

    def test_chain_examples(self):
        assert theta_laplace_chain(1.0, 1.0, 4.0) == pytest.approx(theta_laplace_ad(1.0, 2.0), rel=1e-15)
        assert theta_laplace_chain(0.0, 4.0, 4.0) == pytest.approx(4.0, rel=1e-15)
        assert theta_laplace_chain(0.0, 1.0, 0.2) == pytest.approx(0.4472136, abs=1e-7)
        for m, K in [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)]:
            with pytest.raises(DomainError):
                theta_laplace_chain(1.0, m, K)

    @pytest.mark.parametrize("s", [1.0, 2.0, 5.0])
    def test_time_and_laplace_consistent(self, s):
        # envelope of theta ~ t^{-3/2} e^{-st}; truncate once the tail is negligible
        T = 40.0
        val, _ = quad(lambda t: np.exp(-s * t) * theta_time(t, 2.0), 0, T, limit=400)
        assert val == pytest.approx(theta_laplace_ad(s, 2.0), abs=1e-4)

    def test_integral_of_theta_is_omega0(self):
        # the oscillatory tail converges slowly; use the Laplace limit at small s
        w = 0.5
        val, _ = quad(lambda t: np.exp(-0.01 * t) * theta_time(t, w), 0, 2000, limit=4000)
        assert val == pytest.approx(theta_laplace_ad(0.01, w), abs=1e-4)
        assert theta_laplace_ad(0.0, w) == w


class TestKernelSpec:
    def test_ad_invariants(self):
        k = ad_kernel(2.0, 4.0)
        assert k.d == 1 and k.omega0 == 2.0
        np.testing.assert_allclose(k.m_infinity, [[2.0]])
        assert abs(k.theta(1e9)[0, 0]) < 1e-8
        assert k.theta(0.7)[0, 0] == pytest.approx(theta_laplace_ad(0.7, 2.0))

    def test_block_diagonal_symmetric(self):
        k = block_diag_kernel(ad_kernel(2.0, 4.0), ad_kernel(0.5, 0.2))
        assert k.d == 2
        th = k.theta(1.3)
        np.testing.assert_allclose(th, th.T)
        assert th[0, 1] == 0

    def test_asymmetric_gamma_rejected(self):
        from gle2bd.kernels import KernelSpec
        with pytest.raises(ValidationError):
            KernelSpec(gamma=np.array([[1.0, 0.5], [0.0, 1.0]]),
                       theta_laplace=lambda s: np.zeros((2, 2)), m_infinity=np.zeros((2, 2)))

    def test_named_and_tabulated(self, tmp_path):
        k = kernel_from_name("langevin", gamma=3.0)
        assert k.theta(2.0)[0, 0] == 0
        s = np.linspace(0, 50, 5001)
        path = tmp_path / "theta.csv"
        np.savetxt(path, np.column_stack([s, [theta_laplace_ad(v, 2.0) for v in s]]), delimiter=",")
        tab = tabulated_kernel(path, gamma=2.0, m_infinity=2.0)
        assert tab.theta(1.234)[0, 0] == pytest.approx(theta_laplace_ad(1.234, 2.0), abs=1e-4)
        with pytest.raises(ValidationError):
            kernel_from_name("nope", gamma=1.0)

    def test_closed_form_chi(self):
        for t in (0.0, 0.3, 2.0, 7.5):
            assert chi_closed_form(t, 2.0) == pytest.approx(oracles.chi_gamma0(t, 2.0), abs=1e-12)


class TestMoments:
    @pytest.mark.parametrize("gamma,K", oracles.SCENARIOS)
    def test_series_matches_sympy(self, gamma, K):
        got = kernel_moments(ad_kernel(gamma, K), 3, method="series")
        ref = oracles.moments(gamma, K, 5)
        np.testing.assert_allclose([m[0, 0] for m in got], ref, atol=1e-13)

    def test_examples(self):
        m = kernel_moments(ad_kernel(2.0, 4.0), 2)
        np.testing.assert_allclose([x[0, 0] for x in m], [1, -2, 0], atol=1e-14)
        m = kernel_moments(ad_kernel(0.0, 0.2), 2)
        np.testing.assert_allclose([x[0, 0] for x in m], [1, 0, -0.2], atol=1e-14)
        for g in (0.5, 3.0):
            m = kernel_moments(langevin_kernel(g), 2, method="fd")
            np.testing.assert_allclose([x[0, 0] for x in m], [1, -g, g * g], atol=1e-8)

    @pytest.mark.parametrize("gamma,K", oracles.SCENARIOS)
    def test_fd_agrees_with_series(self, gamma, K):
        k = ad_kernel(gamma, K)
        fd = kernel_moments(k, 2, method="fd")
        se = kernel_moments(k, 2, method="series")
        for a, b in zip(fd, se):
            assert np.max(np.abs(a - b)) <= 1e-8

    def test_fd_refuses_imprecise_orders(self):
        # fourth derivatives at the default steps are dominated by rounding
        with pytest.raises(MomentPrecisionError):
            kernel_moments(ad_kernel(2.0, 4.0), 3, method="fd")

    def test_matrix_moments(self):
        k = block_diag_kernel(ad_kernel(2.0, 4.0), ad_kernel(0.0, 0.2))
        m = kernel_moments(k, 2)
        np.testing.assert_allclose(np.diagonal(m[2]), [0.0, -0.2], atol=1e-14)

    def test_bad_order(self):
        with pytest.raises(ValidationError):
            kernel_moments(ad_kernel(2.0, 4.0), 0)


class TestMorse:
    def test_force_examples(self):
        assert morse_force(0.0) == 0.0
        h = 1e-6
        slope = (morse_force(h) - morse_force(-h)) / (2 * h)
        assert slope == pytest.approx(-2.0, abs=1e-6)
        assert abs(morse_force(60.0)) < 1e-20
        assert morse_field(1.0).stiffness == 2.0

    @given(st.floats(-3, 10), st.floats(0.3, 3))
    @settings(max_examples=50)
    def test_force_is_negative_gradient(self, x, a):
        h = 1e-6
        fd = -(morse_potential(x + h, a) - morse_potential(x - h, a)) / (2 * h)
        assert morse_force(x, a) == pytest.approx(fd, abs=1e-6 * max(1.0, abs(fd)))

    def test_restoring(self):
        assert morse_force(0.1) < 0 < morse_force(-0.1)

    def test_overflow_is_an_error(self):
        with pytest.raises(SimulationError):
            morse_force(-800.0)
