import numpy as np
import pytest
from scipy.special import jv

from fragchain.builders import (
    ClosureError,
    DriveSpec,
    EffectiveModel,
    FfmSpec,
    build_effective,
    build_ffm,
    build_krt_subarray,
    build_rydberg,
    export_operator,
    ffm_sidebands,
)
from fragchain.chain import Basis, ChainSpec, ProductState, primary_v0_block
from fragchain.units import from_mhz


def elem(op, bra: str, ket: str) -> complex:
    i = op.basis.position(ProductState.from_string(bra))
    j = op.basis.position(ProductState.from_string(ket))
    return complex(op.dense()[i, j])


class TestBuildRydberg:
    def test_single_atom(self):
        spec = ChainSpec(n=1, interactions=(0.0, 0.0, 0.0))
        op = build_rydberg(spec, DriveSpec(omega=from_mhz(1.0), delta=0.0))
        assert np.allclose(op.dense(), [[0.0, np.pi], [np.pi, 0.0]])

    def test_pure_interaction(self):
        v0 = from_mhz(5.0)
        spec = ChainSpec(n=2, interactions=(v0, 0.0, 0.0))
        op = build_rydberg(spec, DriveSpec(omega=0.0, delta=0.0))
        assert np.allclose(np.diag(op.dense()), [0.0, 0.0, 0.0, v0])

    def test_c6_ratio(self):
        spec = ChainSpec.from_v0(13, 3.73, from_mhz(320.0), kmax=3)
        assert spec.coupling(1) / spec.coupling(2) == pytest.approx(64.0)

    def test_detuning_sign(self):
        spec = ChainSpec(n=1, interactions=(0.0, 0.0, 0.0))
        op = build_rydberg(spec, DriveSpec(omega=0.0, delta=2.0))
        assert np.allclose(np.diag(op.dense()), [0.0, -2.0])

    def test_closure_error(self, spec13):
        blk = primary_v0_block(spec13)
        with pytest.raises(ClosureError):
            build_rydberg(spec13, DriveSpec(omega=1.0), basis=blk)
        build_rydberg(spec13, DriveSpec(omega=1.0), basis=blk, allow_open_basis=True)

    def test_periodic_pairs(self):
        v0 = 1.0
        spec = ChainSpec(n=4, boundary="periodic", interactions=(v0,), kmax=1)
        op = build_rydberg(spec, DriveSpec(omega=0.0))
        full = ProductState.from_string("rrrr")
        assert op.dense()[op.basis.position(full), op.basis.position(full)] == pytest.approx(4 * v0)

    def test_deterministic_structure(self, spec13):
        drive = DriveSpec(omega=from_mhz(1.45), delta=from_mhz(10.0))
        a = build_rydberg(spec13, drive).tocsr()
        b = build_rydberg(spec13, drive).tocsr()
        assert np.array_equal(a.indices, b.indices)
        assert np.array_equal(a.indptr, b.indptr)
        assert np.array_equal(a.data, b.data)


class TestFfmSidebands:
    def test_zero_depth(self):
        bands = dict(ffm_sidebands(0.0, 3))
        assert bands[0] == pytest.approx(1.0)
        for m in (-3, -2, -1, 1, 2, 3):
            assert abs(bands[m]) == pytest.approx(0.0, abs=1e-15)

    def test_first_zero_depth(self):
        bands = dict(ffm_sidebands(2.4, 2))
        assert abs(bands[0]) <= 0.0026
        assert abs(bands[1]) == pytest.approx(0.52, abs=0.005)
        assert abs(bands[2]) == pytest.approx(0.43, abs=0.005)

    def test_negative_order_symmetry(self):
        for alpha in (0.7, 1.3, 2.4):
            bands = dict(ffm_sidebands(alpha, 4))
            for m in range(5):
                assert jv(-m, alpha) == pytest.approx((-1) ** m * jv(m, alpha), abs=1e-12)
                assert abs(bands[-m]) == pytest.approx(abs(bands[m]), abs=1e-12)

    def test_power_bound(self):
        total = sum(abs(w) ** 2 for _, w in ffm_sidebands(2.4, 12))
        assert total <= 1.0 + 1e-12


class TestBuildFfm:
    def test_zero_modulation_matches_static(self, spec13):
        drive = DriveSpec(omega=from_mhz(1.45), ffm=FfmSpec(delta0=0.0, omega_d=1.0))
        op = build_ffm(spec13, drive)
        static = build_rydberg(spec13, DriveSpec(omega=from_mhz(1.45)))
        assert (op.tocsr() - static.tocsr()).nnz == 0
        assert np.allclose(op.drive_diag, 0.0)

    def test_hermitian_at_any_time(self, spec13):
        drive = DriveSpec(omega=from_mhz(1.45), ffm=FfmSpec(delta0=3.0, omega_d=2.0))
        op = build_ffm(spec13, drive)
        for t in (0.0, 0.17, 1.3):
            m = op.at_time(t)
            d = (m - m.conj().T)
            assert abs(d).max() < 1e-12


class TestEffectiveModels:
    def test_pxp_edge_flip(self):
        spec = ChainSpec(n=3, interactions=(1.0,), kmax=1)
        op = build_effective(EffectiveModel.pxp(2.0), spec)
        assert elem(op, "grg", "ggg") == pytest.approx(1.0)

    def test_qxq_needs_flanking_excitations(self):
        spec = ChainSpec(n=3, interactions=(1.0,), kmax=1)
        op = build_effective(EffectiveModel.qxq(2.0), spec)
        assert elem(op, "rgr", "rrr") == pytest.approx(1.0)
        assert elem(op, "ggg", "grg") == 0.0

    def test_qpxpq_component_example(self, spec13, z4_13):
        from fragchain.fragmentation import component_states

        model = EffectiveModel.qpxpq(1.0, k=2)
        comp = component_states(model, spec13, z4_13)
        assert len(comp) == 13

    def test_diagonal_zero(self, spec13):
        op = build_effective(EffectiveModel.qpxpq(1.0, k=2), spec13)
        assert np.abs(op.diagonal()).max() == 0.0

    def test_krt_hermitian_complex(self, spec13):
        op = build_effective(EffectiveModel.krt(1.0, 1.2, k=2), spec13)
        assert op.hermiticity_error() < 1e-14
        m = op.tocsr()
        assert np.iscomplexobj(m.data)
        assert np.abs(m.data.imag).max() > 0.1  # the one-sided drive is imaginary

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            EffectiveModel("xqx")


class TestKrtSubarray:
    def test_dimension_and_reachability(self):
        from fragchain.fragmentation import connected_components

        op = build_krt_subarray(7, 1.0, 1.2)
        assert op.dim == 128
        sizes = sorted(connected_components(op).sizes())
        assert sizes == [1, 127]

    def test_facilitated_sign(self):
        op = build_krt_subarray(3, 1.0, 1.2)
        assert elem(op, "rgr", "rrr") == pytest.approx(-0.5)

    def test_edge_terms(self):
        op = build_krt_subarray(3, 1.0, 1.2)
        assert elem(op, "rr" + "g", "gr" + "g") == pytest.approx(0.6j)
        assert elem(op, "grg", "ggg") == 0.0

    def test_zero_one_sided_drive_gives_facilitation_sectors(self):
        from fragchain.fragmentation import connected_components

        op = build_krt_subarray(6, 1.0, 0.0)
        # no one-sided drive: lone excitations cannot move or grow
        dec = connected_components(op)
        lone = ProductState.from_string("rggggg")
        assert len(dec.components[dec.component_of(lone)]) == 1

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            build_krt_subarray(2, 1.0, 1.0)

    def test_traceless(self):
        op = build_krt_subarray(5, 1.0, 1.2)
        assert np.abs(op.diagonal()).max() == 0.0


class TestObcEdgeTerms:
    """The open-boundary two-drive model keeps exactly the four edge terms."""

    def test_site1_edge(self):
        spec = ChainSpec(n=6, interactions=(0.0, 0.0, 0.0))
        op = build_effective(EffectiveModel.krt(1.0, 1.2, k=2), spec)
        assert elem(op, "rgrggg", "ggrggg") == pytest.approx(0.6j)

    def test_site2_edge_requires_ground_site1(self):
        spec = ChainSpec(n=6, interactions=(0.0, 0.0, 0.0))
        op = build_effective(EffectiveModel.krt(1.0, 1.2, k=2), spec)
        assert elem(op, "grgrgg", "gggrgg") == pytest.approx(0.6j)
        assert elem(op, "rrgrgg", "rggrgg") == 0.0

    def test_qpxpq_obc_sum_range(self):
        spec = ChainSpec(n=5, interactions=(0.0, 0.0, 0.0))
        op = build_effective(EffectiveModel.qpxpq(2.0, k=2), spec)
        # no term can flip sites 1, 2, N-1, N
        assert elem(op, "rgrgr", "ggrgr") == 0.0
        assert elem(op, "rgrgr", "rgrgg") == 0.0
        assert elem(op, "rgrgr", "rgggr") == pytest.approx(1.0)


class TestExport:
    def test_round_trip_structure(self, tmp_path, spec13):
        op = build_effective(EffectiveModel.qpxpq(1.0, k=2), spec13)
        path = tmp_path / "op.txt"
        export_operator(op, path)
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        coo = op.tocsr().tocoo()
        assert len(lines) == coo.nnz
        r, c, re_, im = lines[0].split()
        assert op.dense()[int(r), int(c)] == pytest.approx(float(re_) + 1j * float(im))
