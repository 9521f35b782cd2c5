import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import solve_continuous_lyapunov

import oracles
from gle2bd import (ChainConfig, EmbeddingError, SimConfig, StabilityError, TimeStepError,
                    ValidationError, ad_kernel, approx_kernel_curve, approx_kernel_eval,
                    build_extended_system, delta_kernel_curve, fit_order, langevin_kernel,
                    linear_field, sample_stationary_gaussian, simulate_bd, simulate_chain,
                    simulate_embedded, simulate_nonlocal, two_time_covariance, zero_field)
from gle2bd.simulators import MAX_NONLOCAL_STEPS, embedded_dt_limit
from gle2bd.simulators._common import NoiseStreams, trajectory_rng


def _var_stderr(samples):
    v = samples.var(ddof=1)
    return v, v * np.sqrt(2.0 / (len(samples) - 1))


def _system(gamma, K, n, kBT=1.0):
    return build_extended_system(fit_order(ad_kernel(gamma, K), n), kBT=kBT)


class TestSimConfig:
    @pytest.mark.parametrize("kw", [dict(dt=0.0, steps=10), dict(dt=0.1, steps=0),
                                    dict(dt=0.1, steps=10, burnin=10),
                                    dict(dt=0.1, steps=10, ensemble=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            SimConfig(**kw)

    def test_recording(self):
        sim = SimConfig(dt=0.1, steps=100, burnin=20, record_every=5)
        assert sim.n_records == 17
        assert sim.is_record_step(25) and not sim.is_record_step(10)


class TestRng:
    def test_streams_independent_of_chunking_and_ensemble(self):
        a = NoiseStreams(7, 3, 2, 50, budget=12)
        b = NoiseStreams(7, 5, 2, 50)
        da = np.stack([a.next() for _ in range(50)])
        db = np.stack([b.next() for _ in range(50)])
        np.testing.assert_array_equal(da, db[:, :3])

    def test_distinct_streams(self):
        x = trajectory_rng(1, 0).standard_normal(4)
        y = trajectory_rng(1, 1).standard_normal(4)
        z = trajectory_rng(2, 0).standard_normal(4)
        assert not np.array_equal(x, y) and not np.array_equal(x, z)


class TestChain:
    def test_dt_guard(self):
        chain = ChainConfig(N=16, K=4.0)
        with pytest.raises(TimeStepError) as exc:
            simulate_chain(chain, SimConfig(dt=0.03, steps=10))
        assert isinstance(exc.value, ValidationError) and isinstance(exc.value, StabilityError)

    def test_energy_at_rest(self):
        chain = ChainConfig(N=32, gamma=0.0, kBT=0.0, a=None)
        sim = SimConfig(dt=1e-3, steps=100_000, record=("energy",), record_every=1000)
        ens = simulate_chain(chain, sim, initial=(np.zeros(32), np.zeros(32)))
        assert np.max(np.abs(ens.series("energy"))) == 0.0

    @pytest.mark.parametrize("a", [None, 1.0])
    def test_energy_no_secular_drift(self, a):
        rng = np.random.default_rng(3)
        N = 32
        x0 = 0.05 * np.cumsum(rng.standard_normal(N))
        x0 -= x0[0]
        v0 = 0.2 * rng.standard_normal(N)
        chain = ChainConfig(N=N, gamma=0.0, kBT=0.0, a=a)
        ens = simulate_chain(chain, SimConfig(dt=1e-3, steps=100_000, record_every=10,
                                                       record=("energy",)),
                             initial=(x0, v0))
        e = ens.series("energy")[0]
        k = len(e) // 10
        drift = abs(e[-k:].mean() - e[:k].mean()) / abs(e[:k].mean())
        assert drift <= 1e-6
        # velocity Verlet oscillation is O(dt^2) around the shadow energy
        assert np.max(np.abs(e - e[0])) / e[0] <= 1e-4

    def test_equipartition(self):
        chain = ChainConfig(N=256, K=4.0, gamma=2.0, kBT=1.0, a=None)
        sim = SimConfig(dt=0.01, steps=20_000, burnin=2000, ensemble=64, seed=11,
                        record_every=20, record=("v",))
        v = simulate_chain(chain, sim).series("v")
        assert np.mean(v * v) == pytest.approx(1.0, rel=0.02)

    def test_determinism(self):
        chain = ChainConfig(N=64, kBT=0.05)
        sim = SimConfig(dt=0.01, steps=300, ensemble=3, seed=5, record=("x", "v"))
        a = simulate_chain(chain, sim)
        b = simulate_chain(chain, sim)
        np.testing.assert_array_equal(a.channels["x"], b.channels["x"])
        c = simulate_chain(chain, SimConfig(dt=0.01, steps=300, ensemble=2, seed=5))
        np.testing.assert_array_equal(a.channels["x"][:2], c.channels["x"])
        assert a.seeds == ((5, 0), (5, 1), (5, 2))


class TestBD:
    def test_free_diffusion(self):
        sim = SimConfig(dt=0.01, steps=400, ensemble=10_000, seed=1, record_every=400)
        x = simulate_bd(ad_kernel(2.0, 4.0), zero_field(), sim).series("x")
        v, se = _var_stderr(x[:, -1] - x[:, 0])
        assert abs(v - 2.0) <= 3 * se

    def test_ou_variance(self):
        sim = SimConfig(dt=0.01, steps=3000, burnin=500, ensemble=4096, seed=2, record_every=50)
        x = simulate_bd(langevin_kernel(1.0), linear_field(2.0), sim).series("x")
        assert np.var(x) == pytest.approx(0.5, rel=0.03)

    def test_determinism(self):
        sim = SimConfig(dt=0.01, steps=50, ensemble=4, seed=9)
        a = simulate_bd(ad_kernel(2.0, 4.0), linear_field(1.0), sim)
        b = simulate_bd(ad_kernel(2.0, 4.0), linear_field(1.0), sim)
        np.testing.assert_array_equal(a.channels["x"], b.channels["x"])


class TestEmbedded:
    def test_dt_guard(self):
        with pytest.raises(TimeStepError):
            simulate_embedded(_system(2.0, 4.0, 1), zero_field(), SimConfig(dt=0.05, steps=10))

    def test_order1_autocovariance(self):
        sim = SimConfig(dt=0.002, steps=500, ensemble=20_000, seed=3, record=("z",))
        ens = simulate_embedded(_system(2.0, 4.0, 1), zero_field(), sim)
        lags = [0.0, 0.25, 0.5, 1.0]
        cov = two_time_covariance(ens, [0.0], lags, channel="z")
        for j, tau in enumerate(lags):
            assert abs(cov.values[0, j] - np.exp(-4 * tau)) <= 3 * cov.stderr[0, j]

    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("gamma,K", oracles.SCENARIOS)
    def test_z_variance(self, gamma, K, n):
        s = _system(gamma, K, n, kBT=0.5)
        dt = min(0.005, embedded_dt_limit(s))
        steps = int(round(1.0 / dt))
        sim = SimConfig(dt=dt, steps=steps, ensemble=8000, seed=4, record=("z",),
                        record_every=steps)
        z = simulate_embedded(s, zero_field(), sim).series("z")
        se = 0.5 * np.sqrt(2.0 / (len(z) - 1))  # sampling error under the target variance
        for col in (0, -1):
            assert abs(z[:, col].var(ddof=1) - 0.5) <= 3 * se

    def test_noise_channel_tracks_z_without_force(self):
        sim = SimConfig(dt=0.005, steps=100, ensemble=4, record=("z", "z1", "w"))
        ens = simulate_embedded(_system(2.0, 4.0, 2), zero_field(), sim)
        np.testing.assert_array_equal(ens.series("z"), ens.series("w"))
        ens = simulate_embedded(_system(2.0, 4.0, 2), linear_field(2.0), sim)
        np.testing.assert_array_equal(ens.series("z")[:, 0], ens.series("w")[:, 0])
        assert not np.array_equal(ens.series("z"), ens.series("w"))
        assert "z1" in ens.channels

    @pytest.mark.parametrize("n", [1, 2])
    def test_linear_force_matches_lyapunov(self, n):
        k = 2.0
        s = _system(2.0, 4.0, n)
        big = oracles.ou_linear_covariance(s.D, s.stack, k)
        noise = np.zeros_like(big)
        noise[1:, 1:] = s.Sigma
        C = solve_continuous_lyapunov(big, -noise)
        sim = SimConfig(dt=0.002, steps=15_000, burnin=5000, ensemble=4096, seed=8,
                        record_every=500, record=("x", "z", "z1") if n == 2 else ("x", "z"))
        ens = simulate_embedded(s, linear_field(k), sim)
        assert np.var(ens.series("x")) == pytest.approx(C[0, 0], rel=0.03)
        assert np.var(ens.series("z")) == pytest.approx(C[-1, -1], rel=0.03)
        if n == 2:
            assert np.var(ens.series("z1")) == pytest.approx(C[1, 1], rel=0.03)


def _increment_variance_oracle(chi_fn, t, kBT=1.0):
    val, _ = quad(lambda s: (t - s) * chi_fn(s), 0, t, limit=200)
    return 2 * kBT * val


class TestNonlocal:
    def test_order1_curve_matches_embedded(self):
        s = _system(2.0, 4.0, 1)
        dt, steps, E = 0.01, 400, 4000
        chi = approx_kernel_curve(s, dt * np.arange(steps + 1))
        a = simulate_nonlocal(chi, zero_field(), SimConfig(dt=dt, steps=steps, ensemble=E,
                                                          seed=12, record_every=steps))
        b = simulate_embedded(s, zero_field(), SimConfig(dt=dt, steps=steps, ensemble=E,
                                                         seed=13, record_every=steps))
        va, sa = _var_stderr(np.diff(a.series("x"), axis=1)[:, 0])
        vb, sb = _var_stderr(np.diff(b.series("x"), axis=1)[:, 0])
        assert abs(va - vb) <= 3 * np.hypot(sa, sb)
        ref = _increment_variance_oracle(lambda u: approx_kernel_eval(s, u)[0, 0], 4.0)
        assert abs(va - ref) <= 3 * sa

    def test_noise_covariance(self):
        s = _system(2.0, 4.0, 2)
        dt, steps = 0.05, 200
        chi = approx_kernel_curve(s, dt * np.arange(steps + 1))
        ens = simulate_nonlocal(chi, zero_field(), SimConfig(dt=dt, steps=steps, ensemble=4000,
                                                            seed=14, record=("w",)))
        lags = dt * np.arange(20)
        cov = two_time_covariance(ens, [1.0], lags, channel="w")
        bad = np.abs(cov.values[0] - chi.scalar[:20]) > 3 * cov.stderr[0]
        assert bad.sum() <= 1  # 20 lags at 3 sigma

    def test_delta_kernel_reduces_to_bd(self):
        dt, steps, E = 0.01, 200, 4000
        chi = delta_kernel_curve(0.25, dt, steps + 1)
        a = simulate_nonlocal(chi, zero_field(), SimConfig(dt=dt, steps=steps, ensemble=E,
                                                          seed=15, record_every=steps))
        b = simulate_bd(ad_kernel(2.0, 4.0), zero_field(), SimConfig(dt=dt, steps=steps,
                                                                     ensemble=E, seed=16,
                                                                     record_every=steps))
        va, sa = _var_stderr(np.diff(a.series("x"), axis=1)[:, 0])
        vb, sb = _var_stderr(np.diff(b.series("x"), axis=1)[:, 0])
        assert abs(va - vb) <= 3 * np.hypot(sa, sb)

    def test_delta_kernel_linear_force_matches_bd_exactly(self):
        dt, steps = 0.01, 300
        chi = delta_kernel_curve(0.25, dt, steps + 1)
        sim = SimConfig(dt=dt, steps=steps, ensemble=2000, seed=17, burnin=100, record_every=50)
        x = simulate_nonlocal(chi, linear_field(2.0), sim).series("x")
        assert np.var(x) == pytest.approx(0.5, rel=0.05)

    def test_steps_cap(self):
        chi = delta_kernel_curve(0.25, 0.01, 10)
        with pytest.raises(ValidationError, match="limited"):
            simulate_nonlocal(chi, zero_field(), SimConfig(dt=0.01, steps=MAX_NONLOCAL_STEPS + 1))

    def test_grid_mismatch(self):
        chi = delta_kernel_curve(0.25, 0.02, 101)
        with pytest.raises(ValidationError):
            simulate_nonlocal(chi, zero_field(), SimConfig(dt=0.01, steps=100))


class TestStationaryGaussian:
    def test_exponential(self):
        grid = 0.1 * np.arange(32)
        p = sample_stationary_gaussian(lambda t: np.exp(-abs(t)), grid, seed=1, size=10_000)
        prod = p[:, 0, 0] * p[:, 10, 0]
        assert abs(prod.mean() - np.exp(-1)) <= 3 * prod.std(ddof=1) / np.sqrt(len(prod))
        v, se = _var_stderr(p[:, 5, 0])
        assert abs(v - 1) <= 3 * se

    def test_white(self):
        p = sample_stationary_gaussian(np.array([1.0, 0.0, 0.0, 0.0]), np.arange(4.0),
                                       seed=2, size=10_000)
        r = p[:, 1, 0] * p[:, 2, 0]
        assert abs(r.mean()) <= 3 * r.std(ddof=1) / np.sqrt(len(r))

    def test_matrix_covariance(self):
        def cov(t):
            a = np.exp(-abs(t))
            return np.array([[a, 0.5 * a], [0.5 * a, a]])
        p = sample_stationary_gaussian(cov, 0.2 * np.arange(16), seed=3, size=20_000)
        c = np.mean(p[:, 3, 0] * p[:, 3, 1])
        assert c == pytest.approx(0.5, abs=0.03)

    def test_determinism(self):
        grid = 0.1 * np.arange(64)
        a = sample_stationary_gaussian(lambda t: np.exp(-t * t), grid, seed=4)
        b = sample_stationary_gaussian(lambda t: np.exp(-t * t), grid, seed=4)
        np.testing.assert_array_equal(a, b)

    def test_not_psd(self):
        with pytest.raises(EmbeddingError):
            sample_stationary_gaussian(np.array([1.0, 1.5, 0.0]), np.arange(3.0))
