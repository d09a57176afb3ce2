import numpy as np
import pytest

from fragchain.builders import DriveSpec, build_rydberg
from fragchain.chain import ChainSpec, ProductState
from fragchain.evolution import EvolutionPlan, evolve_static, product_state_vector
from fragchain.noise import (
    NoiseSpec,
    ensemble_trace,
    interaction_disorder,
    sample_realization,
    spam_adjusted_q,
    spam_channel,
    trajectory_rng,
)
from fragchain.observables import site_expectations
from fragchain.units import from_mhz

PAPER_NOISE = NoiseSpec(sigma_r=0.087, spam_g=0.99, spam_r=0.96, seed=3, n_trajectories=4)


class TestInteractionDisorder:
    def test_paper_point(self):
        spec = ChainSpec.from_v1(13, 3.73, from_mhz(5.0), kmax=3)
        scale = interaction_disorder(spec, PAPER_NOISE, 2, omega=from_mhz(1.45))
        assert scale.sigma_v == pytest.approx(from_mhz(0.35), abs=from_mhz(0.01))
        assert scale.metric == pytest.approx(0.24, abs=0.01)

    def test_zero_spread(self):
        spec = ChainSpec.from_v1(13, 3.73, from_mhz(5.0), kmax=3)
        assert interaction_disorder(spec, NoiseSpec(), 2).sigma_v == 0.0

    def test_metric_scales_inverse_k(self):
        spec = ChainSpec(n=10, a=4.0, interactions=(2.0, 2.0, 2.0))
        s1 = interaction_disorder(spec, PAPER_NOISE, 1).sigma_v
        s2 = interaction_disorder(spec, PAPER_NOISE, 2).sigma_v
        s3 = interaction_disorder(spec, PAPER_NOISE, 3).sigma_v
        assert s1 == pytest.approx(2 * s2)
        assert s1 == pytest.approx(3 * s3)


class TestSampleRealization:
    def test_zero_noise_is_clean(self):
        spec = ChainSpec.from_v0(6, 7.46, from_mhz(5.0), kmax=2)
        real = sample_realization(spec, NoiseSpec(), trajectory_rng(0, 0))
        for (i, j), v in real.pair_couplings.items():
            assert v == pytest.approx(spec.coupling(j - i))
        assert real.detunings == (0.0,) * 6
        assert real.resamples == 0

    def test_mean_coupling_curvature(self):
        """The sample mean of the nearest-neighbour coupling exceeds the
        clean value by the quadratic correction 21 * Var(gap) / a^2 with
        Var(gap) = 2 sigma_r^2 for independent axial displacements."""
        spec = ChainSpec.from_v0(2, 7.46, from_mhz(5.0), kmax=1)
        noise = NoiseSpec(sigma_r=0.15, seed=11)
        rng = np.random.default_rng(11)
        vals = np.array(
            [sample_realization(spec, noise, rng).pair_couplings[(1, 2)] for _ in range(10000)]
        )
        var_gap = 2 * noise.sigma_r**2
        predicted = spec.coupling(1) * (1 + 21 * var_gap / spec.a**2)
        se = vals.std(ddof=1) / np.sqrt(len(vals))
        assert abs(vals.mean() - predicted) < 3 * se

    def test_linearized_spread_formula(self):
        """The per-pair coupling spread matches sqrt(2) times the single-atom
        first-order formula (two independent endpoints contribute)."""
        spec = ChainSpec.from_v0(2, 7.46, from_mhz(5.0), kmax=1)
        noise = NoiseSpec(sigma_r=0.15, seed=7)  # sigma_r/a ~ 0.02
        rng = np.random.default_rng(7)
        vals = np.array(
            [sample_realization(spec, noise, rng).pair_couplings[(1, 2)] for _ in range(20000)]
        )
        formula = interaction_disorder(spec, noise, 1).sigma_v
        assert vals.std(ddof=1) / formula == pytest.approx(np.sqrt(2.0), rel=0.05)

    def test_determinism(self):
        spec = ChainSpec.from_v0(5, 7.46, from_mhz(5.0), kmax=2)
        noise = NoiseSpec(sigma_r=0.1, sigma_doppler=0.3, seed=42)
        a = sample_realization(spec, noise, trajectory_rng(42, 3))
        b = sample_realization(spec, noise, trajectory_rng(42, 3))
        assert a == b


class TestSpamChannel:
    def test_identity(self, rng):
        samples = rng.integers(0, 2**10, size=50)
        out = spam_channel(samples, NoiseSpec(), rng, 10)
        assert np.array_equal(out, samples)

    def test_rydberg_misread_rate(self):
        noise = NoiseSpec(spam_r=0.96)
        rng = np.random.default_rng(5)
        n, shots = 13, 4000
        all_r = np.full(shots, (1 << n) - 1, dtype=np.int64)
        out = spam_channel(all_r, noise, rng, n)
        misread = np.bitwise_count((all_r ^ out).astype(np.uint64)).sum() / shots
        assert misread == pytest.approx(13 * 0.04, abs=0.05)

    def test_commutes_with_averaging(self, rng):
        """Sampling, corrupting, then averaging site occupations agrees with
        the analytic confusion map applied to the clean expectations."""
        from fragchain.chain import Basis
        from fragchain.evolution import QuantumState
        from fragchain.observables import sample_bitstrings

        n = 5
        basis = Basis.full(n)
        v = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        psi = QuantumState(v / np.linalg.norm(v), basis)
        noise = NoiseSpec(spam_g=0.93, spam_r=0.9)
        shots = 20000
        samples = sample_bitstrings(psi, shots, rng)
        corrupted = spam_channel(samples, noise, rng, n)
        u = corrupted.astype(np.uint64)
        measured = np.stack(
            [((u >> np.uint64(n - s)) & np.uint64(1)).mean() for s in range(1, n + 1)]
        )
        expected = spam_adjusted_q(site_expectations(psi, "Q"), noise)
        assert np.allclose(measured, expected, atol=3 * 0.5 / np.sqrt(shots) + 0.01)


class TestEnsembleTrace:
    def small_setup(self):
        spec = ChainSpec.from_v0(5, 7.46, from_mhz(5.0), kmax=2)
        drive = DriveSpec(omega=from_mhz(1.37), delta=spec.coupling(1))
        init = ProductState.from_sites(5, (2, 3))
        plan = EvolutionPlan(t_end=0.6, sample_times=np.linspace(0, 0.6, 7))
        return spec, drive, init, plan

    def test_single_clean_trajectory_matches_static(self):
        spec, drive, init, plan = self.small_setup()
        noise = NoiseSpec(seed=1, n_trajectories=1)
        ens = ensemble_trace(spec, drive, init, plan, noise)
        op = build_rydberg(spec, drive)
        states = evolve_static(op, product_state_vector(op.basis, init), plan)
        clean = np.array([site_expectations(p) for p in states])
        assert np.allclose(ens.means["q_sites"], clean, atol=1e-12)

    def test_seed_determinism(self):
        spec, drive, init, plan = self.small_setup()
        noise = NoiseSpec(sigma_r=0.1, seed=9, n_trajectories=3)
        a = ensemble_trace(spec, drive, init, plan, noise)
        b = ensemble_trace(spec, drive, init, plan, noise)
        assert np.array_equal(a.means["q_sites"], b.means["q_sites"])
        assert np.array_equal(a.stderrs["q_sites"], b.stderrs["q_sites"])

    def test_stderr_scaling(self):
        """Standard error shrinks as 1/sqrt(trajectories) (CLT check)."""
        spec, drive, init, plan = self.small_setup()
        sizes = (8, 32)
        errs = []
        for n_traj in sizes:
            noise = NoiseSpec(sigma_r=0.12, seed=21, n_trajectories=n_traj)
            ens = ensemble_trace(spec, drive, init, plan, noise)
            errs.append(np.mean(ens.stderrs["q_sites"][1:]))
        ratio = errs[0] / errs[1]
        assert ratio == pytest.approx(2.0, rel=0.35)

    def test_worker_count_invariance(self):
        spec, drive, init, plan = self.small_setup()
        noise = NoiseSpec(sigma_r=0.08, seed=4, n_trajectories=4)
        serial = ensemble_trace(spec, drive, init, plan, noise, workers=1)
        parallel = ensemble_trace(spec, drive, init, plan, noise, workers=2)
        assert np.array_equal(serial.means["q_sites"], parallel.means["q_sites"])
