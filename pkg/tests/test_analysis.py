import numpy as np
import pytest

from gle2bd import (SimConfig, TrajectoryEnsemble, ValidationError, ad_kernel,
                    approx_kernel_curve, autocorrelation, build_extended_system,
                    correlation_error, equilibrium_stats, exact_chi_curve, fit_order,
                    kernel_error, simulate_embedded, zero_field)
from gle2bd.laplace import KernelCurve


def _ensemble(x, dt=1.0):
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[:, :, None]
    t = dt * np.arange(x.shape[1])
    return TrajectoryEnsemble(t=t, channels={"x": x}, seeds=tuple((0, i) for i in range(len(x))))


class TestAutocorrelation:
    def test_sine_with_uniform_phases(self):
        w, dt = 2 * np.pi, 0.01
        t = dt * np.arange(1000)  # ten whole periods
        phases = 2 * np.pi * np.arange(8) / 8
        x = np.sin(w * t[None, :] + phases[:, None])
        cs = autocorrelation(_ensemble(x, dt), max_lag=1.5)
        assert np.max(np.abs(cs.values - 0.5 * np.cos(w * cs.lags))) <= 1e-10
        assert cs.mean_subtracted

    def test_iid(self):
        x = np.random.default_rng(0).standard_normal((200, 1000))
        cs = autocorrelation(_ensemble(x), max_lag=10)
        assert abs(cs.values[0] - 1) <= 3 * cs.stderr[0]
        z = np.abs(cs.values[1:]) / cs.stderr[1:]
        assert np.sum(z > 3) <= 1

    def test_ou_from_embedded(self):
        s = build_extended_system(fit_order(ad_kernel(2.0, 4.0), 1))
        sim = SimConfig(dt=0.004, steps=100_000, ensemble=20, seed=21, record=("z",),
                        record_every=5)
        cs = autocorrelation(simulate_embedded(s, zero_field(), sim), max_lag=1.0, channel="z")
        ref = np.exp(-4 * cs.lags)
        assert np.all(np.abs(cs.values - ref) <= 3 * cs.stderr + 1e-12)

    def test_reversal_symmetry(self):
        rng = np.random.default_rng(1)
        e = rng.standard_normal((100, 2000))
        x = np.zeros_like(e)
        for i in range(1, e.shape[1]):
            x[:, i] = 0.9 * x[:, i - 1] + e[:, i]
        fwd = autocorrelation(_ensemble(x), max_lag=20)
        rev = autocorrelation(_ensemble(x[:, ::-1]), max_lag=20)
        assert np.all(np.abs(fwd.values - rev.values) <= 3 * np.hypot(fwd.stderr, rev.stderr))

    def test_stderr_scaling(self):
        x = np.random.default_rng(2).standard_normal((1600, 500))
        a = autocorrelation(_ensemble(x[:800]), max_lag=5)
        b = autocorrelation(_ensemble(x), max_lag=5)
        ratio = a.stderr / b.stderr
        assert np.all(np.abs(ratio - np.sqrt(2)) <= 0.1 * np.sqrt(2))

    def test_single_trajectory_blocks(self):
        x = np.random.default_rng(3).standard_normal((1, 4000))
        cs = autocorrelation(_ensemble(x), max_lag=10)
        assert np.all(np.isfinite(cs.stderr))

    def test_max_lag_too_large(self):
        with pytest.raises(ValidationError):
            autocorrelation(_ensemble(np.zeros((2, 100))), max_lag=30)

    def test_normalize(self):
        x = 3 * np.random.default_rng(4).standard_normal((50, 500))
        cs = autocorrelation(_ensemble(x), max_lag=5, normalize=True)
        assert cs.values[0] == 1.0 and cs.normalized

    def test_mean_removal_modes(self):
        rng = np.random.default_rng(5)
        e = rng.standard_normal((2000, 200))
        x = np.zeros_like(e)
        x[:, 0] = e[:, 0] / np.sqrt(1 - 0.81)  # stationary start
        for i in range(1, e.shape[1]):
            x[:, i] = 0.9 * x[:, i - 1] + e[:, i]
        var = 1 / (1 - 0.81)
        pooled = autocorrelation(_ensemble(x), max_lag=10)
        own = autocorrelation(_ensemble(x), max_lag=10, mean="trajectory")
        assert abs(pooled.values[0] - var) <= 3 * pooled.stderr[0]
        assert var - own.values[0] > 3 * own.stderr[0]
        with pytest.raises(ValidationError, match="mean"):
            autocorrelation(_ensemble(x), max_lag=10, mean="none")

    def test_missing_channel(self):
        with pytest.raises(ValidationError, match="not recorded"):
            autocorrelation(_ensemble(np.zeros((2, 100))), max_lag=5, channel="w")


class TestKernelError:
    def setup_method(self):
        self.t = np.linspace(0, 10, 501)
        self.ref = exact_chi_curve(ad_kernel(2.0, 4.0), self.t)

    def test_identical(self):
        assert kernel_error(self.ref, self.ref, 10.0) == 0.0

    def test_zero_candidate(self):
        zero = KernelCurve(t=self.t, values=np.zeros_like(self.ref.values), provenance="closed-form")
        assert kernel_error(self.ref, zero, 10.0) == pytest.approx(1.0, abs=1e-15)

    def test_grid_mismatch(self):
        other = exact_chi_curve(ad_kernel(2.0, 4.0), np.linspace(0, 10, 401))
        with pytest.raises(ValidationError):
            kernel_error(self.ref, other, 10.0)

    def test_order2_beats_order1_at_small_K(self):
        k = ad_kernel(0.0, 0.2)
        ref = exact_chi_curve(k, self.t)
        e1 = kernel_error(ref, approx_kernel_curve(fit_order(k, 1), self.t), 10.0)
        e2 = kernel_error(ref, approx_kernel_curve(fit_order(k, 2), self.t), 10.0)
        assert e2 < e1


def test_correlation_error():
    x = np.random.default_rng(5).standard_normal((20, 500))
    cs = autocorrelation(_ensemble(x), max_lag=5)
    assert correlation_error(cs, cs) == 0.0


class TestEquilibriumStats:
    def test_constant(self):
        st = equilibrium_stats(_ensemble(np.full((4, 50), 2.5)))
        assert st["x"]["variance"] == 0.0 and st["x"]["mean"] == 2.5

    def test_embedded_z_variance(self):
        s = build_extended_system(fit_order(ad_kernel(2.0, 4.0), 2), kBT=0.3)
        sim = SimConfig(dt=0.005, steps=400, ensemble=4000, seed=22, record=("z",),
                        record_every=100)
        st = equilibrium_stats(simulate_embedded(s, zero_field(), sim))["z"]
        assert abs(st["variance"] - 0.3) <= 3 * st["variance_stderr"]
