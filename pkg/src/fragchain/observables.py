"""Measured quantities: site-resolved projections, staggered magnetizations,
densities, correlators, entropies, microstate histograms, and Fourier
spectra.

All functions accept states over the full basis or over a restricted basis
(e.g. one Krylov component); entropies are computed from the basis bit
patterns directly, so restricted bases need no embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import Basis, ProductState, hamming_distance, site_bit
from .evolution import QuantumState
from .units import to_mhz

__all__ = [
    "SubarraySpec",
    "ObservableTrace",
    "subarray_a_prime",
    "subarray_a",
    "subarray_b",
    "z6_subarrays",
    "site_expectations",
    "staggered_magnetization",
    "ground_density",
    "two_body_correlator",
    "single_site_entropy",
    "bipartite_entropy",
    "MicrostateHistogram",
    "microstate_histogram",
    "fourier_spectrum",
    "spectrum_peak",
    "sample_bitstrings",
    "trace_from_states",
]

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class SubarraySpec:
    """A named set of sites with the index convention for staggered sums.

    The alternating sign applied to the k-th member (k = 0, 1, ...) is
    (-1)**(index_start + k); named subarrays fix index_start so that the
    boundary-included array starts at -1 and its interior continues the same
    sign pattern.
    """

    name: str
    sites: tuple[int, ...]
    index_start: int = 1

    def __post_init__(self):
        if not self.sites:
            raise ValueError("subarray must have at least one member")
        if any(s < 1 for s in self.sites):
            raise ValueError("sites are 1-based")
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))

    def __len__(self) -> int:
        return len(self.sites)

    def signs(self) -> np.ndarray:
        k = np.arange(len(self.sites))
        return (-1.0) ** (self.index_start + k)


def subarray_a_prime(n: int) -> SubarraySpec:
    """Odd sites including the chain ends (the thermalizing subarray)."""
    return SubarraySpec("A'", tuple(range(1, n + 1, 2)), index_start=1)


def subarray_a(n: int) -> SubarraySpec:
    """Odd sites with the boundary atoms excluded."""
    sites = tuple(range(3, n - 1, 2))
    return SubarraySpec("A", sites, index_start=2)


def subarray_b(n: int) -> SubarraySpec:
    """Even sites (frozen under the constrained models studied here)."""
    return SubarraySpec("B", tuple(range(2, n + 1, 2)), index_start=1)


def z6_subarrays(n: int) -> tuple[SubarraySpec, SubarraySpec, SubarraySpec]:
    """Three interleaved subarrays of a period-3 constrained chain."""
    a = tuple(range(1, n + 1, 3))
    b = tuple(range(2, n + 1, 3))
    c = tuple(range(3, n + 1, 3))
    return (
        SubarraySpec("A", a, index_start=1),
        SubarraySpec("B", b, index_start=1),
        SubarraySpec("C", c, index_start=1),
    )


@dataclass
class ObservableTrace:
    """Time series of one observable with its provenance."""

    times: np.ndarray
    values: np.ndarray
    observable: str = ""
    subarray: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values)
        if self.times.shape[0] != self.values.shape[0]:
            raise ValueError("times and values must have equal length")

    def __len__(self) -> int:
        return len(self.times)


def _q_matrix(basis: Basis, sites) -> np.ndarray:
    """Occupation table: entry [i, k] is the bit of basis state i at sites[k]."""
    u = np.asarray(basis.states, dtype=np.uint64)
    n = basis.n_sites
    cols = [((u >> np.uint64(n - s)) & np.uint64(1)).astype(np.float64) for s in sites]
    return np.stack(cols, axis=1)


def site_expectations(psi: QuantumState, which: str = "Q") -> np.ndarray:
    """Per-site expectations of Q (Rydberg projector), P (ground projector),
    or Z (with Z|g> = -|g>, Z|r> = +|r>, so <Z> = 2<Q> - 1)."""
    if which not in ("Q", "P", "Z"):
        raise ValueError("which must be 'Q', 'P' or 'Z'")
    p = psi.probabilities()
    q = _q_matrix(psi.basis, range(1, psi.basis.n_sites + 1)).T @ p
    if which == "Q":
        return q
    if which == "P":
        return 1.0 - q
    return 2.0 * q - 1.0


def staggered_magnetization(psi_or_states, sub: SubarraySpec):
    """Alternating-sign mean of <Z_i> over a subarray; in [-1, 1].

    Accepts a state (returns a float) or a sequence of states (returns an
    array of per-state values).
    """
    if not isinstance(psi_or_states, QuantumState):
        return np.array([staggered_magnetization(p, sub) for p in psi_or_states])
    psi = psi_or_states
    p = psi.probabilities()
    q = _q_matrix(psi.basis, sub.sites).T @ p
    z = 2.0 * q - 1.0
    return float(np.dot(sub.signs(), z) / len(sub))


def ground_density(psi_or_states, sub: SubarraySpec):
    """Mean ground-state projector over the subarray; in [0, 1]."""
    if not isinstance(psi_or_states, QuantumState):
        return np.array([ground_density(p, sub) for p in psi_or_states])
    psi = psi_or_states
    p = psi.probabilities()
    q = _q_matrix(psi.basis, sub.sites).T @ p
    return float(1.0 - q.mean())


def two_body_correlator(psi: QuantumState, sub: SubarraySpec) -> float:
    """Sum of <n_i n_j> over consecutive subarray member pairs."""
    if len(sub) < 2:
        raise ValueError("correlator needs at least two subarray members")
    p = psi.probabilities()
    qm = _q_matrix(psi.basis, sub.sites)
    pair = qm[:, :-1] * qm[:, 1:]
    return float(p @ pair.sum(axis=1))


def trace_from_states(times, states, func, name="", subarray="", metadata=None) -> ObservableTrace:
    """Evaluate a state observable along a trajectory."""
    vals = np.array([func(st) for st in states])
    return ObservableTrace(np.asarray(times), vals, name, subarray, metadata or {})


def _site_rho(psi: QuantumState, site: int) -> np.ndarray:
    """2x2 reduced density matrix of one site from a (possibly restricted)
    basis, by grouping amplitudes over the other sites' bit patterns."""
    n = psi.basis.n_sites
    if not 1 <= site <= n:
        raise ValueError("site out of range")
    bit = 1 << (n - site)
    rho = np.zeros((2, 2), dtype=np.complex128)
    groups = {}
    for v, a in zip(psi.basis.states, psi.amplitudes):
        if a == 0:
            continue
        v = int(v)
        g = groups.setdefault(v & ~bit, [0.0, 0.0])
        g[1 if v & bit else 0] += a
    for g0, g1 in groups.values():
        vec = np.array([g0, g1])
        rho += np.outer(vec, vec.conj())
    return rho


def _entropy_of_spectrum(w: np.ndarray) -> float:
    w = w[w > 1e-14]
    return float(-np.sum(w * np.log(w)))


def single_site_entropy(psi: QuantumState, site: int) -> float:
    """Von Neumann entropy (nats) of one atom's reduced state; in [0, ln 2]."""
    rho = _site_rho(psi, site)
    w = np.linalg.eigvalsh(rho)
    return _entropy_of_spectrum(w)


def bipartite_entropy(psi: QuantumState, cut: int) -> float:
    """Entanglement entropy (nats) across the bond after site `cut`
    (subsystem = sites 1..cut); symmetric under complementation."""
    n = psi.basis.n_sites
    if not 1 <= cut <= n - 1:
        raise ValueError("cut must lie strictly inside the chain")
    shift = n - cut
    lows = {}
    highs = {}
    entries = []
    for v, a in zip(psi.basis.states, psi.amplitudes):
        v = int(v)
        hi, lo = v >> shift, v & ((1 << shift) - 1)
        hi_i = highs.setdefault(hi, len(highs))
        lo_i = lows.setdefault(lo, len(lows))
        entries.append((hi_i, lo_i, a))
    m = np.zeros((len(highs), len(lows)), dtype=np.complex128)
    for hi_i, lo_i, a in entries:
        m[hi_i, lo_i] = a
    s = np.linalg.svd(m, compute_uv=False)
    return _entropy_of_spectrum(s**2)


@dataclass(frozen=True)
class MicrostateHistogram:
    """Probabilities over a Krylov component's states ordered by Hamming
    distance from a reference state, plus an explicit leakage bucket for
    weight outside the component."""

    states: tuple[ProductState, ...]
    distances: np.ndarray
    probabilities: np.ndarray
    leakage: float

    def total(self) -> float:
        return float(self.probabilities.sum() + self.leakage)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("state,distance,probability\n")
            for s, d, p in zip(self.states, self.distances, self.probabilities):
                fh.write(f"{s},{d},{p:.17g}\n")
            fh.write(f"leakage,-1,{self.leakage:.17g}\n")


def microstate_histogram(psi_or_samples, component: Basis, initial: ProductState) -> MicrostateHistogram:
    """Distribution over a component's basis, ordered by (Hamming distance to
    the initial state, then lexicographically).

    `psi_or_samples` is a QuantumState or an integer array of measured
    bitstrings; samples outside the component land in the leakage bucket.
    """
    members = list(component)
    dist = np.array([hamming_distance(s, initial) for s in members])
    order = np.lexsort((component.states, dist))
    members = [members[i] for i in order]
    dist = dist[order]
    if isinstance(psi_or_samples, QuantumState):
        psi = psi_or_samples
        prob_by_state = {}
        for v, p in zip(psi.basis.states, psi.probabilities()):
            prob_by_state[int(v)] = prob_by_state.get(int(v), 0.0) + float(p)
        probs = np.array([prob_by_state.pop(m.to_int(), 0.0) for m in members])
        leak = float(sum(prob_by_state.values()))
    else:
        samples = np.asarray(psi_or_samples, dtype=np.int64)
        pos = component.positions(samples)
        inside = pos >= 0
        counts = np.bincount(pos[inside], minlength=len(component)).astype(float)
        counts = counts[order]
        total = max(1, samples.size)
        probs = counts / total
        leak = float(np.sum(~inside)) / total
    return MicrostateHistogram(tuple(members), dist, probs, leak)


def fourier_spectrum(trace: ObservableTrace, window: tuple[float, float] | None = None):
    """Single-sided normalized power spectrum of a uniformly sampled trace.

    Returns (frequencies in MHz, power normalized to unit total mass over the
    single-sided bins).  Frequency resolution is the inverse window length.
    """
    t, v = trace.times, np.asarray(trace.values, dtype=float)
    if window is not None:
        keep = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
        t, v = t[keep], v[keep]
    if len(t) < 4:
        raise ValueError("need at least 4 samples")
    dts = np.diff(t)
    if np.max(np.abs(dts - dts[0])) > 1e-9 * max(dts[0], 1e-12):
        raise ValueError("trace is not uniformly sampled")
    amp = np.fft.rfft(v)
    power = np.abs(amp) ** 2
    total = power.sum()
    if total > 0:
        power = power / total
    freqs = np.fft.rfftfreq(len(v), d=dts[0])  # MHz for times in us
    return freqs, power


def spectrum_peak(freqs: np.ndarray, power: np.ndarray) -> tuple[float, float]:
    """(frequency, height) of the largest non-DC bin."""
    if len(freqs) < 2:
        raise ValueError("spectrum has no non-DC bins")
    k = 1 + int(np.argmax(power[1:]))
    return float(freqs[k]), float(power[k])


def sample_bitstrings(psi: QuantumState, n_shots: int, rng: np.random.Generator) -> np.ndarray:
    """Projective readout: integer-encoded bitstrings drawn from |psi|^2."""
    p = psi.probabilities()
    p = p / p.sum()
    idx = rng.choice(len(p), size=n_shots, p=p)
    return psi.basis.states[idx]
