"""Microcanonical predictions within Krylov components, and the comparison
utilities used to test thermalization against them."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .builders import DENSE_LIMIT, OperatorMatrix
from .chain import Basis
from .evolution import QuantumState
from .observables import ObservableTrace

__all__ = [
    "EmptyEnsembleError",
    "MicrocanonicalEnsemble",
    "build_ensemble",
    "ensemble_expectation",
    "eigen_observable_scatter",
    "time_average",
    "diagonal_ensemble_average",
    "infinite_time_average",
    "WINDOW_EDGE_GUARD",
]

WINDOW_EDGE_GUARD = 1e-9  # eigenvalues this close to a window edge are flagged
DEGENERACY_TOL = 1e-10


class EmptyEnsembleError(ValueError):
    """No eigenstate falls inside the requested energy window."""


@dataclass(frozen=True)
class MicrocanonicalEnsemble:
    """Equal-weight ensemble of component eigenstates inside
    [e0 - de, e0 + de] (window boundary inclusive)."""

    basis: Basis
    energies: np.ndarray
    vectors: np.ndarray  # columns are the member eigenstates
    e0: float
    de: float

    def __len__(self) -> int:
        return int(self.energies.size)

    def members(self) -> list[QuantumState]:
        return [QuantumState(self.vectors[:, i], self.basis) for i in range(len(self))]

    def report(self, expectations: dict | None = None) -> str:
        import json

        doc = {
            "window": [self.e0 - self.de, self.e0 + self.de],
            "member_count": len(self),
            "energies": [float(e) for e in self.energies],
        }
        if expectations:
            doc["expectations"] = {k: float(v) for k, v in expectations.items()}
        return json.dumps(doc, indent=2)


def _component_operator(op: OperatorMatrix, component) -> OperatorMatrix:
    if component is None:
        return op
    return op.restricted(np.asarray(component, dtype=np.int64))


def _dense_eig(op: OperatorMatrix):
    if op.dim > DENSE_LIMIT:
        raise ValueError(f"dimension {op.dim} exceeds the dense-ED cap {DENSE_LIMIT}")
    return np.linalg.eigh(op.dense())


def build_ensemble(
    op: OperatorMatrix,
    component=None,
    e0: float = 0.0,
    de: float | None = None,
    omega_f: float | None = None,
) -> MicrocanonicalEnsemble:
    """Microcanonical ensemble of the operator restricted to a component.

    `component` is an index array into the operator's basis (None keeps the
    whole basis).  The default window half-width is 0.24 * omega_f.  An
    eigenvalue within `WINDOW_EDGE_GUARD` of a window edge makes membership
    numerically fragile and triggers a warning.
    """
    if de is None:
        if omega_f is None:
            raise ValueError("supply a window half-width de or omega_f")
        de = 0.24 * omega_f
    sub = _component_operator(op, component)
    w, u = _dense_eig(sub)
    inside = np.abs(w - e0) <= de
    if not inside.any():
        raise EmptyEnsembleError(f"no eigenstate within [{e0 - de}, {e0 + de}]")
    edge = np.min(np.abs(np.abs(w - e0) - de))
    if edge < WINDOW_EDGE_GUARD:
        warnings.warn(
            f"eigenvalue within {edge:.2e} of the window edge; member count is fragile",
            stacklevel=2,
        )
    return MicrocanonicalEnsemble(sub.basis, w[inside], u[:, inside], e0, de)


def _observable_values(ens_basis: Basis, vectors: np.ndarray, observable) -> np.ndarray:
    """Per-column expectation values of a diagonal array, a matrix, or a
    callable mapping QuantumState -> value."""
    if callable(observable):
        return np.array(
            [observable(QuantumState(vectors[:, i], ens_basis)) for i in range(vectors.shape[1])]
        )
    observable = np.asarray(observable)
    p = np.abs(vectors) ** 2
    if observable.ndim == 1:
        return p.T @ observable
    return np.real(np.einsum("ia,ij,ja->a", vectors.conj(), observable, vectors))


def ensemble_expectation(ens: MicrocanonicalEnsemble, observable) -> float:
    """Equal-weight average of the observable over the ensemble members."""
    if len(ens) == 0:
        raise EmptyEnsembleError("ensemble has no members")
    return float(np.mean(_observable_values(ens.basis, ens.vectors, observable)))


def eigen_observable_scatter(op: OperatorMatrix, component, observable):
    """(energy, expectation) per eigenstate of the component-restricted
    operator, sorted by energy."""
    sub = _component_operator(op, component)
    w, u = _dense_eig(sub)
    vals = _observable_values(sub.basis, u, observable)
    order = np.argsort(w)
    return np.stack([w[order], vals[order]], axis=1)


def time_average(trace: ObservableTrace, t_start: float, t_end: float) -> float:
    """Mean of the trace samples falling in [t_start, t_end] (inclusive)."""
    keep = (trace.times >= t_start - 1e-12) & (trace.times <= t_end + 1e-12)
    if not keep.any():
        raise ValueError("window contains no samples")
    return float(np.mean(np.asarray(trace.values, dtype=float)[keep]))


def diagonal_ensemble_average(op: OperatorMatrix, psi0: QuantumState, observable) -> float:
    """Diagonal-ensemble value sum_n |<n|psi0>|^2 <n|O|n> (valid prediction
    of the infinite-time average for a nondegenerate spectrum)."""
    w, u = _dense_eig(op)
    c = u.conj().T @ psi0.amplitudes
    vals = _observable_values(op.basis, u, observable)
    return float(np.dot(np.abs(c) ** 2, vals))


def infinite_time_average(op: OperatorMatrix, psi0: QuantumState, observable) -> float:
    """Exact infinite-time average of <psi(t)|O|psi(t)>, keeping coherences
    inside degenerate blocks (reduces to the diagonal ensemble when the
    spectrum is nondegenerate)."""
    w, u = _dense_eig(op)
    c = u.conj().T @ psi0.amplitudes
    observable = np.asarray(observable)
    if observable.ndim == 1:
        omat = u.conj().T @ (observable[:, None] * u)
    else:
        omat = u.conj().T @ observable @ u
    total = 0.0
    order = np.argsort(w)
    i = 0
    while i < len(w):
        j = i
        while j + 1 < len(w) and w[order[j + 1]] - w[order[i]] < DEGENERACY_TOL:
            j += 1
        block = order[i : j + 1]
        cb = c[block]
        total += float(np.real(cb.conj() @ omat[np.ix_(block, block)] @ cb))
        i = j + 1
    return total
