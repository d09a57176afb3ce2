"""Hamiltonian builders: the full Rydberg chain, its frequency-modulated
variant, and the effective kinetically constrained models.

Every builder returns an `OperatorMatrix` over an explicit basis.  Matrix
elements follow the convention that a projector-weighted amplitude multiplies
the raising operator on the flipped site, with the Hermitian conjugate terms
added, so complex drive amplitudes still produce Hermitian matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from .chain import Basis, ChainSpec, ProductState, pair_count, popcount

__all__ = [
    "ClosureError",
    "DriveSpec",
    "FfmSpec",
    "EffectiveModel",
    "SineSchedule",
    "OperatorMatrix",
    "ffm_sidebands",
    "build_rydberg",
    "build_ffm",
    "build_effective",
    "build_krt_subarray",
    "effective_moves",
    "export_operator",
    "DENSE_LIMIT",
    "HERMITICITY_TOL",
]

DENSE_LIMIT = 4096  # dense storage at or below this dimension
HERMITICITY_TOL = 1e-12


class ClosureError(ValueError):
    """The basis is not closed under the couplings the model generates."""


@dataclass(frozen=True)
class FfmSpec:
    """Sinusoidal detuning modulation Delta(t) = delta0 * sin(omega_d * t).

    `harmonics` records compensation amplitudes applied in hardware to keep
    the drive amplitude flat; they do not enter the simulated Hamiltonian.
    """

    delta0: float
    omega_d: float
    harmonics: tuple[float, ...] = ()

    def __post_init__(self):
        if self.omega_d <= 0:
            raise ValueError("modulation frequency must be positive")
        if not np.isfinite(self.delta0 / self.omega_d):
            raise ValueError("modulation depth delta0/omega_d must be finite")

    @property
    def alpha(self) -> float:
        """Modulation depth."""
        return self.delta0 / self.omega_d


@dataclass(frozen=True)
class DriveSpec:
    """Global drive: Rabi frequency, static detuning, optional modulation."""

    omega: float
    delta: float = 0.0
    ffm: FfmSpec | None = None

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("Rabi frequency must be nonnegative")


@dataclass(frozen=True)
class EffectiveModel:
    """A constrained spin-flip model.

    kind is one of 'pxp', 'qxq', 'qpxpq', 'krt', 'ppxpp', 'ppxpp_v1'.
    Single-drive models use `omega`; the two-drive kinds ('krt',
    'ppxpp_v1') use `omega_f` (resonance at 2*V_{k-1}) and `omega_fp`
    (resonance at V_{k-1}).
    """

    kind: str
    k: int = 2
    omega: float = 0.0
    omega_f: float = 0.0
    omega_fp: float = 0.0

    _KINDS = ("pxp", "qxq", "qpxpq", "krt", "ppxpp", "ppxpp_v1")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("constraint range k must be >= 1")
        if self.kind in ("krt", "ppxpp_v1") and (self.omega_f < 0 or self.omega_fp < 0):
            raise ValueError("two-drive Rabi amplitudes must be nonnegative")

    @classmethod
    def pxp(cls, omega: float) -> "EffectiveModel":
        return cls("pxp", k=1, omega=omega)

    @classmethod
    def qxq(cls, omega: float) -> "EffectiveModel":
        return cls("qxq", k=1, omega=omega)

    @classmethod
    def qpxpq(cls, omega: float, k: int = 2) -> "EffectiveModel":
        return cls("qpxpq", k=k, omega=omega)

    @classmethod
    def krt(cls, omega_f: float, omega_fp: float, k: int = 2) -> "EffectiveModel":
        return cls("krt", k=k, omega_f=omega_f, omega_fp=omega_fp)

    @classmethod
    def ppxpp(cls, omega: float, k: int = 2) -> "EffectiveModel":
        return cls("ppxpp", k=k, omega=omega)

    @classmethod
    def ppxpp_v1(cls, omega_f: float, omega_fp: float, k: int = 2) -> "EffectiveModel":
        return cls("ppxpp_v1", k=k, omega_f=omega_f, omega_fp=omega_fp)

    @property
    def complex_valued(self) -> bool:
        return self.kind == "krt"

    def describe(self) -> str:
        if self.kind in ("krt", "ppxpp_v1"):
            return f"{self.kind}(k={self.k}, omega_f={self.omega_f:g}, omega_fp={self.omega_fp:g})"
        return f"{self.kind}(k={self.k}, omega={self.omega:g})"


@dataclass(frozen=True)
class SineSchedule:
    """Scalar schedule sin(omega_d * t) with an exact segment integral."""

    omega_d: float

    def value(self, t: float) -> float:
        return np.sin(self.omega_d * t)

    def integral(self, t0: float, t1: float) -> float:
        w = self.omega_d
        return (np.cos(w * t0) - np.cos(w * t1)) / w


@dataclass
class OperatorMatrix:
    """A Hermitian operator over an ordered product-state basis.

    `matrix` is dense below `DENSE_LIMIT` and CSR above.  Time-dependent
    generators carry a diagonal `drive_diag` multiplied by `schedule`;
    evaluation at any time is Hermitian.  Builders that produce the
    "diagonal plus uniform transverse drive" structure record it in
    (`e_diag`, `x_omega`) so propagators can use the split-step kernel.
    Instances are immutable by convention and safe to share across workers.
    """

    basis: Basis
    matrix: object
    spec: ChainSpec | None = None
    label: str = ""
    drive_diag: np.ndarray | None = None
    schedule: SineSchedule | None = None
    e_diag: np.ndarray | None = field(default=None, repr=False)
    x_omega: float | None = None

    def __post_init__(self):
        herm = self.hermiticity_error()
        scale = max(1.0, self.max_abs())
        if herm > HERMITICITY_TOL * scale:
            raise ValueError(f"matrix is not Hermitian (error {herm:.3e})")
        d = self.diagonal()
        if np.iscomplexobj(d) and np.max(np.abs(d.imag)) > HERMITICITY_TOL * scale:
            raise ValueError("diagonal has imaginary part")

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    @property
    def time_dependent(self) -> bool:
        return self.schedule is not None

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def max_abs(self) -> float:
        if self.is_sparse:
            return float(np.abs(self.matrix.data).max()) if self.matrix.nnz else 0.0
        return float(np.abs(self.matrix).max()) if self.dim else 0.0

    def hermiticity_error(self) -> float:
        if self.is_sparse:
            d = (self.matrix - self.matrix.conj().T).tocoo()
            return float(np.abs(d.data).max()) if d.nnz else 0.0
        return float(np.abs(self.matrix - self.matrix.conj().T).max()) if self.dim else 0.0

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def tocsr(self) -> sp.csr_matrix:
        return self.matrix.tocsr() if self.is_sparse else sp.csr_matrix(self.matrix)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def expectation(self, amplitudes: np.ndarray) -> float:
        return float(np.real(np.vdot(amplitudes, self.matrix @ amplitudes)))

    def at_time(self, t: float):
        """Matrix evaluated at time t (static part plus scheduled diagonal)."""
        if not self.time_dependent:
            return self.matrix
        shift = self.schedule.value(t) * self.drive_diag
        if self.is_sparse:
            return self.matrix + sp.diags(shift)
        return self.matrix + np.diag(shift)

    def restricted(self, positions: np.ndarray, label: str | None = None) -> "OperatorMatrix":
        """Restriction to a subset of basis positions (e.g. one Krylov
        component).  Valid when the subset is dynamically closed."""
        positions = np.asarray(positions, dtype=np.int64)
        sub_basis = Basis(self.basis.n_sites, self.basis.states[positions])
        if self.is_sparse:
            m = self.matrix.tocsr()[positions][:, positions]
            if m.shape[0] <= DENSE_LIMIT:
                m = m.toarray()
        else:
            m = self.matrix[np.ix_(positions, positions)]
        dd = self.drive_diag[positions] if self.drive_diag is not None else None
        return OperatorMatrix(
            sub_basis, m, spec=self.spec, label=label or f"{self.label}|restricted",
            drive_diag=dd, schedule=self.schedule,
        )


def ffm_sidebands(alpha: float, m_max: int) -> list[tuple[int, complex]]:
    """Sideband weights i^m * J_m(alpha) of a sinusoidally modulated drive.

    Returns (m, weight) for m = -m_max..m_max.  The total power sum of
    |J_m|^2 over all integer m is 1, so any truncation is bounded by it.
    """
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    out = []
    for m in range(-m_max, m_max + 1):
        out.append((m, (1j) ** m * jv(m, alpha)))
    return out


def _offdiag_flips(basis: Basis, amplitude: float, allow_open_basis: bool):
    """Row/col/value triples coupling every state to its single-site flips."""
    n = basis.n_sites
    states = basis.states
    src = np.arange(len(basis), dtype=np.int64)
    rows, cols, vals = [], [], []
    for site in range(1, n + 1):
        bitmask = 1 << (n - site)
        flipped = states ^ bitmask
        dst = basis.positions(flipped)
        missing = dst < 0
        if missing.any():
            if not allow_open_basis:
                bad = ProductState.from_int(int(flipped[missing][0]), n)
                raise ClosureError(
                    f"basis not closed under single flips: site {site} leads to {bad}"
                )
            keep = ~missing
            rows.append(dst[keep]); cols.append(src[keep])
        else:
            rows.append(dst); cols.append(src)
        vals.append(np.full(rows[-1].size, amplitude))
    return (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def _assemble(basis, diag, rows, cols, vals, dtype=np.float64):
    dim = len(basis)
    if dim <= DENSE_LIMIT:
        m = np.zeros((dim, dim), dtype=dtype)
        if diag is not None:
            m[np.arange(dim), np.arange(dim)] = diag
        np.add.at(m, (rows, cols), vals.astype(dtype))
        return m
    data = [vals.astype(dtype)]
    rr, cc = [rows], [cols]
    if diag is not None:
        idx = np.arange(dim, dtype=np.int64)
        rr.append(idx); cc.append(idx); data.append(diag.astype(dtype))
    m = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rr), np.concatenate(cc))),
        shape=(dim, dim),
    ).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def rydberg_diagonal(spec: ChainSpec, drive: DriveSpec, basis: Basis, realization=None) -> np.ndarray:
    """Diagonal of the Rydberg Hamiltonian: -Delta * n_r plus interaction
    pair energies truncated at kmax.  A disorder `realization` replaces the
    uniform couplings with per-pair values and adds per-atom detunings."""
    states = basis.states
    n = spec.n
    diag = -drive.delta * popcount(states).astype(np.float64)
    if realization is None:
        for j in spec.interaction_orders():
            diag += spec.coupling(j) * pair_count(states, n, j, periodic=spec.periodic)
    else:
        u = np.asarray(states, dtype=np.uint64)
        for (i, jsite), v in realization.pair_couplings.items():
            bi = (u >> np.uint64(n - i)) & np.uint64(1)
            bj = (u >> np.uint64(n - jsite)) & np.uint64(1)
            diag += v * (bi & bj).astype(np.float64)
        for i, d in enumerate(realization.detunings, start=1):
            if d:
                bi = (u >> np.uint64(n - i)) & np.uint64(1)
                diag += -d * bi.astype(np.float64)
    return diag


def build_rydberg(
    spec: ChainSpec,
    drive: DriveSpec,
    basis: Basis | None = None,
    realization=None,
    allow_open_basis: bool = False,
) -> OperatorMatrix:
    """Full Rydberg Hamiltonian
    ``-Delta sum Q_i + (Omega/2) sum X_i + sum_j sum_i V_{j-1} Q_i Q_{i+j}``
    over `basis` (full 2^N basis by default).

    With a nonzero Rabi frequency the basis must be closed under single spin
    flips; `allow_open_basis=True` instead projects onto the given basis
    (couplings leading outside are dropped), which is an explicit, logged
    approximation used for blockade-truncated desk-scale runs.

    The drive must be static here; use `build_ffm` for modulated detuning.
    """
    if drive.ffm is not None:
        raise ValueError("build_rydberg takes a static drive; use build_ffm")
    if basis is None:
        basis = Basis.full(spec.n)
    if basis.n_sites != spec.n:
        raise ValueError("basis and spec disagree on chain length")
    diag = rydberg_diagonal(spec, drive, basis, realization)
    if drive.omega != 0:
        rows, cols, vals = _offdiag_flips(basis, drive.omega / 2.0, allow_open_basis)
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    m = _assemble(basis, diag, rows, cols, vals)
    full_and_clean = basis.is_full
    return OperatorMatrix(
        basis, m, spec=spec, label="rydberg",
        e_diag=diag if full_and_clean else None,
        x_omega=drive.omega if full_and_clean else None,
    )


def build_ffm(
    spec: ChainSpec,
    drive: DriveSpec,
    basis: Basis | None = None,
    realization=None,
    allow_open_basis: bool = False,
) -> OperatorMatrix:
    """Frequency-modulated Rydberg Hamiltonian: the static part plus a
    detuning term ``-delta0 sin(omega_d t) sum Q_i`` carried as a scheduled
    diagonal."""
    if drive.ffm is None:
        raise ValueError("build_ffm requires a modulation block")
    static = DriveSpec(omega=drive.omega, delta=drive.delta)
    op = build_rydberg(spec, static, basis, realization, allow_open_basis)
    nq = popcount(op.basis.states).astype(np.float64)
    return OperatorMatrix(
        op.basis, op.matrix, spec=spec, label="rydberg+ffm",
        drive_diag=-drive.ffm.delta0 * nq,
        schedule=SineSchedule(drive.ffm.omega_d),
        e_diag=op.e_diag, x_omega=op.x_omega,
    )


def effective_moves(model: EffectiveModel, spec: ChainSpec):
    """Allowed single-site flips of an effective model.

    Returns ``moves(state_int) -> list[(site, flipped_int, amp)]`` where
    `amp` is the raising-operator amplitude for a g->r flip at `site` (the
    r->g element is its conjugate).  Out-of-range neighbours follow the
    model's boundary convention: PXP/QXQ/PPXPP replace missing projectors by
    identity; the facilitation charges of QPXPQ, KRT and the second-drive
    term treat missing Q as 0 and missing P as 1, which reproduces the open
    chain edge terms of the constrained models exactly.
    """
    n = spec.n
    periodic = spec.periodic
    kind, k = model.kind, model.k

    def q(s: int, site: int, default: int) -> int:
        if periodic:
            site = (site - 1) % n + 1
        elif site < 1 or site > n:
            return default
        return (s >> (n - site)) & 1

    def amp(s: int, j: int):
        if kind == "pxp":
            if q(s, j - 1, 0) == 0 and q(s, j + 1, 0) == 0:
                return model.omega / 2.0
            return 0.0
        if kind == "qxq":
            if q(s, j - 1, 1) == 1 and q(s, j + 1, 1) == 1:
                return model.omega / 2.0
            return 0.0
        if kind == "qpxpq":
            if q(s, j - k, 0) and q(s, j + k, 0) and all(
                q(s, j - l, 0) == 0 and q(s, j + l, 0) == 0 for l in range(1, k)
            ):
                return model.omega / 2.0
            return 0.0
        if kind == "ppxpp":
            if all(q(s, j - l, 0) == 0 and q(s, j + l, 0) == 0 for l in range(1, k + 1)):
                return model.omega / 2.0
            return 0.0
        # two-drive kinds: inner blockade projectors, then the charge factor
        if any(q(s, j - l, 0) or q(s, j + l, 0) for l in range(1, k)):
            return 0.0
        qm, qp = q(s, j - k, 0), q(s, j + k, 0)
        if kind == "krt":
            if qm and qp:
                return -model.omega_f / 2.0
            if qm or qp:
                return 0.5j * model.omega_fp
            return 0.0
        # ppxpp_v1: blockade-only carrier plus one-sided second drive
        if qm and qp:
            return 0.0
        if qm or qp:
            return model.omega_fp / 2.0
        return model.omega_f / 2.0

    def moves(s: int):
        out = []
        for j in range(1, n + 1):
            a = amp(s, j)
            if a != 0:
                out.append((j, s ^ (1 << (n - j)), a))
        return out

    return moves


def build_effective(
    model: EffectiveModel,
    spec: ChainSpec,
    basis: Basis | None = None,
    allow_open_basis: bool = False,
) -> OperatorMatrix:
    """Effective constrained Hamiltonian over `basis` (full by default).

    Off-diagonal elements connect states differing at one site whose
    projector conditions hold; the diagonal is identically zero.  If an
    allowed move leaves the basis a `ClosureError` is raised unless
    projection is explicitly permitted.
    """
    if basis is None:
        basis = Basis.full(spec.n)
    if basis.n_sites != spec.n:
        raise ValueError("basis and spec disagree on chain length")
    moves = effective_moves(model, spec)
    dtype = np.complex128 if model.complex_valued else np.float64
    rows, cols, vals = [], [], []
    for pos in range(len(basis)):
        s = int(basis.states[pos])
        for site, s2, a in moves(s):
            if (s >> (spec.n - site)) & 1:
                continue  # count each pair once from its g side
            try:
                pos2 = basis.position(s2)
            except KeyError:
                if allow_open_basis:
                    continue
                raise ClosureError(
                    f"{model.describe()} couples {ProductState.from_int(s, spec.n)} "
                    f"to a state outside the basis (flip at site {site})"
                )
            rows.extend((pos2, pos))
            cols.extend((pos, pos2))
            vals.extend((a, np.conj(a)))
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=dtype)
    m = _assemble(basis, None, rows, cols, vals, dtype=dtype)
    return OperatorMatrix(basis, m, spec=spec, label=model.describe())


def build_krt_subarray(n_sub: int, omega_f: float, omega_fp: float) -> OperatorMatrix:
    """Two-drive constrained model on an open subchain of participating atoms.

    This is the k=1 member of the two-drive family: facilitation acts on
    nearest neighbours of the subchain (which are the k-th neighbours of the
    full chain it abstracts).  The edge sites couple through the one-sided
    drive only; the diagonal is traceless.
    """
    if n_sub < 3:
        raise ValueError("subchain needs at least 3 sites")
    spec = ChainSpec(n=n_sub, boundary="open", kmax=1, interactions=(0.0,))
    model = EffectiveModel.krt(omega_f, omega_fp, k=1)
    op = build_effective(model, spec)
    op.label = f"krt_subarray(n={n_sub})"
    return op


def export_operator(op: OperatorMatrix, path) -> None:
    """Coordinate-list text export: header naming the basis ordering, then
    one `row col re im` line per stored element."""
    coo = op.tocsr().tocoo()
    with open(path, "w") as fh:
        fh.write(f"# operator: {op.label or 'unnamed'}\n")
        fh.write(f"# dimension: {op.dim}\n")
        fh.write(
            "# basis: product states over sites 1..%d, ascending lexicographic "
            "('g'<'r', site 1 most significant)\n" % op.basis.n_sites
        )
        if not op.basis.is_full:
            fh.write("# basis states: " + ",".join(op.basis.to_strings()) + "\n")
        fh.write("# row col re im\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            v = complex(v)
            fh.write(f"{r} {c} {v.real:.17g} {v.imag:.17g}\n")
