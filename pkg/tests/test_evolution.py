import numpy as np
import pytest

from fragchain.builders import (
    DriveSpec,
    EffectiveModel,
    FfmSpec,
    build_effective,
    build_ffm,
    build_rydberg,
)
from fragchain.chain import Basis, ChainSpec, ProductState
from fragchain.evolution import (
    EvolutionPlan,
    QuantumState,
    ToleranceError,
    evolve_ffm,
    evolve_static,
    product_state_vector,
    sample_grid,
)
from fragchain.fragmentation import component_states, connected_components
from fragchain.kernels import KERNEL_BACKEND, split_step_run
from fragchain.units import from_mhz


def plan_for(t_end, n=61, **kw):
    return EvolutionPlan(t_end=t_end, sample_times=np.linspace(0.0, t_end, n), **kw)


class TestKernels:
    def test_backends_agree(self, rng):
        from fragchain import _kernels_py

        n = 6
        dim = 1 << n
        psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        psi /= np.linalg.norm(psi)
        e = rng.normal(size=dim)
        n_exc = np.bitwise_count(np.arange(dim, dtype=np.uint64)).astype(np.int8)
        thetas = np.ascontiguousarray(rng.normal(size=(40, 2)))
        u_half = np.exp(-1j * e * 0.005)
        args = (u_half, n_exc, thetas, np.cos(0.03), np.sin(0.03), n)
        a = psi.copy()
        b = psi.copy()
        _kernels_py.split_step_run(a, *args)
        split_step_run(b, *args)
        assert np.allclose(a, b, atol=1e-13)
        assert abs(np.linalg.norm(b) - 1) < 1e-12

    def test_backend_reported(self):
        assert KERNEL_BACKEND in ("compiled", "python")


class TestEvolveStatic:
    def test_zero_hamiltonian(self):
        spec = ChainSpec(n=3, interactions=(0.0, 0.0, 0.0))
        op = build_rydberg(spec, DriveSpec(omega=0.0))
        psi0 = product_state_vector(op.basis, ProductState.from_string("rgr"))
        out = evolve_static(op, psi0, plan_for(2.0, 7))
        for st in out:
            assert st.fidelity(psi0) == pytest.approx(1.0)

    def test_rabi_formula(self):
        omega = from_mhz(1.0)
        spec = ChainSpec(n=1, interactions=(0.0, 0.0, 0.0))
        op = build_rydberg(spec, DriveSpec(omega=omega))
        psi0 = product_state_vector(op.basis, ProductState.from_string("g"))
        plan = plan_for(2.0, 81)
        out = evolve_static(op, psi0, plan)
        p_r = np.array([abs(st.amplitudes[1]) ** 2 for st in out])
        assert np.allclose(p_r, np.sin(omega * plan.sample_times / 2) ** 2, atol=1e-10)

    def test_scar_oscillation_frequency(self, spec13, z4_13):
        from fragchain.observables import fourier_spectrum, spectrum_peak, staggered_magnetization, subarray_a, trace_from_states

        omega = from_mhz(1.45)
        model = EffectiveModel.qpxpq(omega, k=2)
        comp = component_states(model, spec13, z4_13)
        basis = Basis(13, np.asarray(comp, dtype=np.int64))
        op = build_effective(model, spec13, basis)
        plan = plan_for(3.0, 91)
        out = evolve_static(op, product_state_vector(basis, z4_13), plan)
        sub = subarray_a(13)
        m = trace_from_states(plan.sample_times, out, lambda p: staggered_magnetization(p, sub))
        f, p = fourier_spectrum(m)
        peak, _ = spectrum_peak(f, p)
        assert abs(peak - 0.67 * 1.45) <= 0.17

    def test_splitstep_matches_eigh_stiff(self, spec13, z4_13):
        drive = DriveSpec(omega=from_mhz(1.45), delta=2 * spec13.coupling(2))
        spec10 = ChainSpec.from_v1(10, 3.73, spec13.coupling(2), kmax=3)
        op = build_rydberg(spec10, DriveSpec(omega=drive.omega, delta=drive.delta))
        psi0 = product_state_vector(op.basis, ProductState.from_sites(10, (1, 5, 9)))
        plan_e = plan_for(1.5, 4)
        plan_s = plan_for(1.5, 4, method="splitstep", tol=1e-8)
        ref = evolve_static(op, psi0, plan_e)
        ss = evolve_static(op, psi0, plan_s)
        assert abs(1 - ref[-1].fidelity(ss[-1])) < 1e-7

    def test_energy_conservation(self, rng):
        spec = ChainSpec.from_v0(8, 7.46, from_mhz(4.9), kmax=3)
        op = build_rydberg(spec, DriveSpec(omega=from_mhz(1.4), delta=from_mhz(2.0)))
        psi0 = product_state_vector(op.basis, ProductState.from_sites(8, (3, 5)))
        out = evolve_static(op, psi0, plan_for(3.0, 31))
        energies = [op.expectation(st.amplitudes) for st in out]
        scale = max(1.0, abs(energies[0]), op.max_abs())
        assert max(abs(e - energies[0]) for e in energies) < 1e-8 * scale

    def test_unitarity(self):
        spec = ChainSpec.from_v0(7, 7.46, from_mhz(4.9), kmax=2)
        op = build_rydberg(spec, DriveSpec(omega=from_mhz(1.4)))
        psi0 = product_state_vector(op.basis, ProductState.all_ground(7))
        out = evolve_static(op, psi0, plan_for(5.0, 51))
        for st in out:
            assert abs(st.norm() - 1.0) < 1e-9

    def test_time_reversal(self):
        spec = ChainSpec.from_v0(6, 7.46, from_mhz(4.9), kmax=2)
        op = build_rydberg(spec, DriveSpec(omega=from_mhz(1.4), delta=from_mhz(1.0)))
        from fragchain.builders import OperatorMatrix

        neg = OperatorMatrix(op.basis, -op.dense(), spec=op.spec)
        psi0 = product_state_vector(op.basis, ProductState.from_sites(6, (2, 5)))
        fwd = evolve_static(op, psi0, plan_for(2.0, 5))
        back = evolve_static(neg, fwd[-1], plan_for(2.0, 5))
        assert back[-1].fidelity(psi0) >= 1 - 1e-8

    def test_krylov_confinement(self, spec13, z4_13):
        model = EffectiveModel.qpxpq(1.0, k=2)
        op = build_effective(model, spec13)
        dec = connected_components(op)
        comp = dec.components[dec.component_of(z4_13)]
        psi0 = product_state_vector(op.basis, z4_13)
        out = evolve_static(op, psi0, plan_for(8.0, 17, method="expm"))
        inside = np.zeros(op.dim, dtype=bool)
        inside[comp] = True
        for st in out:
            assert st.probabilities()[~inside].sum() < 1e-10

    def test_basis_mismatch(self, spec13):
        op = build_rydberg(spec13, DriveSpec(omega=1.0))
        other = Basis.full(12)
        psi = QuantumState(np.eye(1 << 12)[0], other)
        with pytest.raises(ValueError):
            evolve_static(op, psi, plan_for(1.0, 3))

    def test_non_hermitian_rejected(self, spec13):
        from fragchain.builders import OperatorMatrix

        m = np.zeros((4, 4))
        m[0, 1] = 1.0
        with pytest.raises(ValueError):
            OperatorMatrix(Basis.full(2), m)


class TestEvolveFfm:
    def test_zero_modulation_consistency(self):
        spec = ChainSpec.from_v1(8, 3.73, from_mhz(5.0), kmax=3)
        omega = from_mhz(1.48)
        v1 = spec.coupling(2)
        ffm = DriveSpec(omega=omega, ffm=FfmSpec(delta0=0.0, omega_d=v1))
        op_t = build_ffm(spec, ffm)
        op_s = build_rydberg(spec, DriveSpec(omega=omega))
        psi0 = product_state_vector(op_t.basis, ProductState.from_sites(8, (1, 5)))
        plan = plan_for(2.0, 5, tol=1e-9)
        out_t = evolve_ffm(op_t, psi0, plan)
        out_s = evolve_static(op_s, psi0, EvolutionPlan(t_end=2.0, sample_times=plan.sample_times))
        assert out_t[-1].fidelity(out_s[-1]) > 1 - 1e-9

    def test_convergence_order(self):
        """Halving the step shrinks the error as step^p with p >= 2."""
        from fragchain.evolution import _split_step_samples

        spec = ChainSpec.from_v1(6, 3.73, from_mhz(3.0), kmax=3)
        v1 = spec.coupling(2)
        drive = DriveSpec(omega=from_mhz(1.48), ffm=FfmSpec(delta0=2.4 * v1, omega_d=v1))
        op = build_ffm(spec, drive)
        psi0 = product_state_vector(op.basis, ProductState.from_sites(6, (1, 5)))
        times = np.array([0.0, 0.8])
        ref = _split_step_samples(op, psi0, times, 1e-5, 2.4 * v1, v1)[-1]
        errs = []
        for h in (4e-4, 2e-4, 1e-4):
            out = _split_step_samples(op, psi0, times, h, 2.4 * v1, v1)[-1]
            errs.append(np.linalg.norm(out.amplitudes - ref.amplitudes))
        p1 = np.log2(errs[0] / errs[1])
        p2 = np.log2(errs[1] / errs[2])
        assert p1 >= 1.8 and p2 >= 1.8

    def test_refuses_coarse_step(self):
        spec = ChainSpec.from_v1(4, 3.73, from_mhz(5.0), kmax=3)
        v1 = spec.coupling(2)
        drive = DriveSpec(omega=from_mhz(1.0), ffm=FfmSpec(delta0=2.4 * v1, omega_d=v1))
        op = build_ffm(spec, drive)
        psi0 = product_state_vector(op.basis, ProductState.all_ground(4))
        with pytest.raises(ToleranceError):
            evolve_ffm(op, psi0, plan_for(0.5, 3), step=1.0)

    def test_m_relaxes_under_two_drive_modulation(self):
        """Period-4 start with the modulated drive: the boundary-included
        staggered magnetization relaxes from -1 toward 0."""
        from fragchain.observables import staggered_magnetization, subarray_a_prime

        n = 9
        omega = from_mhz(1.48)
        omega_f = 0.43 * omega
        v1 = 7.9 * omega_f
        spec = ChainSpec.from_v1(n, 3.73, v1, kmax=3)
        drive = DriveSpec(omega=omega, ffm=FfmSpec(delta0=2.4 * v1, omega_d=v1))
        op = build_ffm(spec, drive)
        z4 = ProductState.from_sites(n, (1, 5, 9))
        t_end = 3 * 2 * np.pi / omega_f
        plan = EvolutionPlan(t_end=t_end, sample_times=np.linspace(0, t_end, 61), tol=1e-5)
        out = evolve_ffm(op, product_state_vector(op.basis, z4), plan)
        sub = subarray_a_prime(n)
        m = np.array([staggered_magnetization(st, sub) for st in out])
        assert m[0] == pytest.approx(-1.0)
        late = m[plan.sample_times > 2 * t_end / 3]
        assert np.abs(late).mean() < 0.35


class TestSampleGrid:
    def test_rabi_density(self):
        omega = from_mhz(1.45)
        grid = sample_grid(3.0, omega)
        assert grid[0] == 0.0 and grid[-1] == pytest.approx(3.0)
        assert np.max(np.diff(grid)) <= (2 * np.pi / omega) / 30 + 1e-12

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            EvolutionPlan(t_end=1.0, sample_times=np.array([0.0, 2.0]))
        with pytest.raises(ValueError):
            EvolutionPlan(t_end=1.0, sample_times=np.array([0.5, 0.1]))
