import numpy as np
import pytest

from fragchain.builders import (
    DriveSpec,
    EffectiveModel,
    OperatorMatrix,
    build_effective,
    build_krt_subarray,
    build_rydberg,
)
from fragchain.chain import Basis, ChainSpec, ProductState
from fragchain.evolution import EvolutionPlan, evolve_static, product_state_vector
from fragchain.fragmentation import connected_components
from fragchain.observables import (
    ObservableTrace,
    SubarraySpec,
    ground_density,
    staggered_magnetization,
)
from fragchain.thermal import (
    EmptyEnsembleError,
    build_ensemble,
    diagonal_ensemble_average,
    eigen_observable_scatter,
    ensemble_expectation,
    infinite_time_average,
    time_average,
)


def odd_subarray_op(omega_f=1.0, ratio=1.2):
    op = build_krt_subarray(7, omega_f, ratio * omega_f)
    dec = connected_components(op)
    comp = max(dec.components, key=len)
    return op, comp


class TestBuildEnsemble:
    def test_member_count_seventeen(self):
        op, comp = odd_subarray_op()
        ens = build_ensemble(op, comp, e0=0.0, omega_f=1.0)
        assert len(ens) == 17

    def test_member_count_nine_even_case(self):
        op = build_krt_subarray(6, 1.0, 1.2)
        dec = connected_components(op)
        comp = max(dec.components, key=len)
        ens = build_ensemble(op, comp, e0=0.0, omega_f=1.0)
        assert len(ens) == 9

    def test_scale_invariance(self):
        omega = 2 * np.pi * 0.6364  # the experimental drive scale
        op, comp = odd_subarray_op(omega_f=omega)
        ens = build_ensemble(op, comp, e0=0.0, omega_f=omega)
        assert len(ens) == 17

    def test_single_atom_symmetry(self):
        basis = Basis.full(1)
        op = OperatorMatrix(basis, np.array([[0.0, 0.5], [0.5, 0.0]]))
        ens = build_ensemble(op, None, e0=0.0, de=1.0)
        assert len(ens) == 2
        z = np.array([-1.0, 1.0])
        assert ensemble_expectation(ens, z) == pytest.approx(0.0, abs=1e-12)

    def test_empty_window(self):
        basis = Basis.full(1)
        op = OperatorMatrix(basis, np.array([[0.0, 0.5], [0.5, 0.0]]))
        with pytest.raises(EmptyEnsembleError):
            build_ensemble(op, None, e0=0.0, de=0.1)

    def test_edge_robustness(self):
        """No eigenvalue sits near the default window edge for the
        experimental parameters, so membership is stable to tiny window
        perturbations."""
        op, comp = odd_subarray_op()
        sub = op.restricted(np.asarray(comp))
        w = np.linalg.eigvalsh(sub.dense())
        de = 0.24
        assert np.min(np.abs(np.abs(w) - de)) > 1e-9
        for eps in (-1e-12, 1e-12):
            ens = build_ensemble(op, comp, e0=0.0, de=de + eps)
            assert len(ens) == 17


class TestEnsembleExpectation:
    def test_staggered_magnetization_value(self):
        op, comp = odd_subarray_op()
        ens = build_ensemble(op, comp, e0=0.0, omega_f=1.0)
        sub = SubarraySpec("A'", tuple(range(1, 8)))
        m = ensemble_expectation(ens, lambda p: staggered_magnetization(p, sub))
        assert m == pytest.approx(-0.019, abs=0.002)

    def test_ground_probability_even(self):
        op = build_krt_subarray(6, 1.0, 1.2)
        dec = connected_components(op)
        comp = max(dec.components, key=len)
        ens = build_ensemble(op, comp, e0=0.0, omega_f=1.0)
        sub = SubarraySpec("even", tuple(range(1, 7)))
        pg = ensemble_expectation(ens, lambda p: ground_density(p, sub))
        assert pg == pytest.approx(0.52, abs=0.01)

    def test_ground_probability_odd(self):
        op, comp = odd_subarray_op()
        ens = build_ensemble(op, comp, e0=0.0, omega_f=1.0)
        sub = SubarraySpec("odd", tuple(range(1, 8)))
        pg = ensemble_expectation(ens, lambda p: ground_density(p, sub))
        assert pg == pytest.approx(0.53, abs=0.01)

    def test_diagonal_observable_array(self):
        op, comp = odd_subarray_op()
        ens = build_ensemble(op, comp, e0=0.0, omega_f=1.0)
        ones = np.ones(len(ens.basis))
        assert ensemble_expectation(ens, ones) == pytest.approx(1.0)


class TestScatter:
    def test_diagonal_matrix_classical_points(self):
        basis = Basis.full(2)
        diag = np.array([0.0, 1.0, 2.0, 5.0])
        op = OperatorMatrix(basis, np.diag(diag))
        pts = eigen_observable_scatter(op, None, diag)
        assert np.allclose(pts[:, 0], sorted(diag))
        assert np.allclose(pts[:, 0], pts[:, 1])

    def test_smooth_band(self):
        """The staggered magnetization forms a narrow band against energy in
        the odd-subarray model (bounded scatter in sliding bins)."""
        op, comp = odd_subarray_op()
        sub = SubarraySpec("A'", tuple(range(1, 8)))
        pts = eigen_observable_scatter(op, comp, lambda p: staggered_magnetization(p, sub))
        e, m = pts[:, 0], pts[:, 1]
        for lo in np.linspace(e.min(), e.max() - 0.5, 12):
            inwin = (e >= lo) & (e <= lo + 0.5)
            if inwin.sum() >= 3:
                assert m[inwin].std() < 0.12

    def test_spectral_reflection(self):
        """The subarray model is bipartite: the spectrum is symmetric and the
        staggered magnetization maps onto itself under E -> -E."""
        op, comp = odd_subarray_op()
        sub = SubarraySpec("A'", tuple(range(1, 8)))
        pts = eigen_observable_scatter(op, comp, lambda p: staggered_magnetization(p, sub))
        e = pts[:, 0]
        assert np.allclose(np.sort(e), -np.sort(-e)[::-1], atol=1e-10)


class TestTimeAverage:
    def test_constant(self):
        tr = ObservableTrace(np.linspace(0, 1, 11), np.full(11, 3.3))
        assert time_average(tr, 0.2, 0.8) == pytest.approx(3.3)

    def test_sinusoid_full_periods(self):
        t = np.linspace(0, 2.0, 2001)
        tr = ObservableTrace(t, 2.0 + np.sin(2 * np.pi * 5 * t))
        assert time_average(tr, 0.0, 2.0) == pytest.approx(2.0, abs=1e-3)

    def test_empty_window(self):
        tr = ObservableTrace(np.linspace(0, 1, 5), np.zeros(5))
        with pytest.raises(ValueError):
            time_average(tr, 2.0, 3.0)


class TestDiagonalEnsemble:
    def test_matches_infinite_time_average_nondegenerate(self):
        op, comp = odd_subarray_op()
        sub_op = op.restricted(np.asarray(comp))
        z4 = ProductState.from_string("rgrgrgr")
        psi0 = product_state_vector(sub_op.basis, z4)
        sub = SubarraySpec("A'", tuple(range(1, 8)))
        from fragchain.observables import _q_matrix

        mdiag = (2 * _q_matrix(sub_op.basis, sub.sites) - 1) @ sub.signs() / 7
        w = np.linalg.eigvalsh(sub_op.dense())
        assert np.min(np.diff(np.sort(w))) > 1e-8  # nondegenerate here
        d = diagonal_ensemble_average(sub_op, psi0, mdiag)
        inf = infinite_time_average(sub_op, psi0, mdiag)
        assert d == pytest.approx(inf, abs=1e-8)

    def test_long_time_average_converges_to_diagonal(self):
        op, comp = odd_subarray_op()
        sub_op = op.restricted(np.asarray(comp))
        z4 = ProductState.from_string("rgrgrgr")
        psi0 = product_state_vector(sub_op.basis, z4)
        sub = SubarraySpec("A'", tuple(range(1, 8)))
        t_end = 400.0
        plan = EvolutionPlan(t_end=t_end, sample_times=np.linspace(0, t_end, 4001))
        states = evolve_static(sub_op, psi0, plan)
        ms = np.array([staggered_magnetization(p, sub) for p in states])
        from fragchain.observables import _q_matrix

        mdiag = (2 * _q_matrix(sub_op.basis, sub.sites) - 1) @ sub.signs() / 7
        d = diagonal_ensemble_average(sub_op, psi0, mdiag)
        assert ms.mean() == pytest.approx(d, abs=0.01)


class TestKrylovRestrictedProfiles:
    def test_equal_energy_starts_relax_to_disjoint_parities(self, spec13):
        """The restricted-thermalization signature: even and odd starts keep
        their excitation support on disjoint site parities."""
        from fragchain.fragmentation import component_states
        from fragchain.observables import site_expectations

        model = EffectiveModel.krt(1.0, 1.2, k=2)
        profiles = {}
        for tag, sites in (("even", (2, 8, 12)), ("odd", (3, 9, 13))):
            init = ProductState.from_sites(13, sites)
            comp = component_states(model, spec13, init)
            basis = Basis(13, np.asarray(comp, dtype=np.int64))
            op = build_effective(model, spec13, basis)
            assert np.abs(op.diagonal()).max() == 0.0  # exactly degenerate starts
            plan = EvolutionPlan(t_end=12.0, sample_times=np.linspace(8.0, 12.0, 9))
            states = evolve_static(op, product_state_vector(basis, init), plan)
            q = np.mean([site_expectations(p) for p in states], axis=0)
            profiles[tag] = q
        even_sites = np.arange(1, 14) % 2 == 0
        assert profiles["even"][~even_sites].max() < 1e-10
        assert profiles["odd"][even_sites].max() < 1e-10
