"""Krylov-subspace discovery and labelling: connectivity analysis, the
three-stage basis sort, frozen-state detection, domain-wall counting, and
matrix-plot grids.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cs_components

from .builders import EffectiveModel, OperatorMatrix, effective_moves
from .chain import (
    Basis,
    ChainSpec,
    ConfigClass,
    ConfigurationError,
    ProductState,
    classify_configuration,
    pair_count,
)

__all__ = [
    "CONNECTIVITY_TOL",
    "KrylovDecomposition",
    "SortedBasis",
    "connected_components",
    "component_states",
    "sorted_basis",
    "find_frozen_states",
    "frozen_state_count_scan",
    "count_domain_walls",
    "subchain_parities",
    "leftmost_subchain_parity",
    "MatrixPlot",
    "matrix_plot",
]

CONNECTIVITY_TOL = 1e-12  # |H_ij| above this counts as an edge


@dataclass(frozen=True)
class ComponentLabels:
    """Annotations of one Krylov component.  Counts that are not uniform
    across the component are reported as None."""

    v0_pairs: int | None
    v1_pairs: int | None
    config_class: ConfigClass | None
    n_dw: int | None


@dataclass(frozen=True)
class KrylovDecomposition:
    """Partition of a basis into dynamically disconnected components.

    `components` are index arrays into the basis, ordered by smallest member
    index; construction verifies that no matrix element crosses components.
    """

    basis: Basis
    components: tuple[np.ndarray, ...]
    labels: tuple[ComponentLabels, ...]
    owner: np.ndarray

    def __len__(self) -> int:
        return len(self.components)

    def sizes(self) -> list[int]:
        return [len(c) for c in self.components]

    def component_of(self, state) -> int:
        return int(self.owner[self.basis.position(state)])

    def member_states(self, i: int) -> list[ProductState]:
        return [self.basis[int(p)] for p in self.components[i]]

    def write_report(self, path, member_dir=None) -> None:
        """One line per component: size, labels, member-list file reference."""
        import os

        with open(path, "w") as fh:
            fh.write("# component size v0_pairs v1_pairs config_class n_dw members_file\n")
            for i, (comp, lab) in enumerate(zip(self.components, self.labels)):
                ref = "-"
                if member_dir is not None:
                    os.makedirs(member_dir, exist_ok=True)
                    ref = os.path.join(member_dir, f"component_{i:04d}.txt")
                    with open(ref, "w") as mf:
                        for s in self.member_states(i):
                            mf.write(s.to_string() + "\n")
                    ref = os.path.basename(ref)
                cc = lab.config_class.value if lab.config_class else "-"
                fh.write(
                    f"{i} {len(comp)} "
                    f"{lab.v0_pairs if lab.v0_pairs is not None else '-'} "
                    f"{lab.v1_pairs if lab.v1_pairs is not None else '-'} "
                    f"{cc} {lab.n_dw if lab.n_dw is not None else '-'} {ref}\n"
                )


def _edge_pattern(op: OperatorMatrix) -> sp.csr_matrix:
    m = op.tocsr().tocoo()
    keep = (np.abs(m.data) > CONNECTIVITY_TOL) & (m.row != m.col)
    return sp.csr_matrix(
        (np.ones(keep.sum()), (m.row[keep], m.col[keep])), shape=m.shape
    )


def _uniform(values) -> int | None:
    vals = set(int(v) for v in values)
    return vals.pop() if len(vals) == 1 else None


def _component_labels(op: OperatorMatrix, comp: np.ndarray) -> ComponentLabels:
    spec = op.spec
    states = op.basis.states[comp]
    if spec is None:
        return ComponentLabels(None, None, None, None)
    n = op.basis.n_sites
    v0 = _uniform(pair_count(states, n, 1, periodic=spec.periodic))
    v1 = _uniform(pair_count(states, n, 2, periodic=spec.periodic)) if n >= 2 else 0
    cls = None
    ndw = None
    if v0 == 0:
        classes = set()
        dws = set()
        for v in states:
            ps = ProductState.from_int(int(v), n)
            classes.add(classify_configuration(ps))
            dws.add(count_domain_walls(ps, spec))
        cls = classes.pop() if len(classes) == 1 else ConfigClass.MIXED
        ndw = dws.pop() if len(dws) == 1 else None
    return ComponentLabels(v0, v1, cls, ndw)


def connected_components(op: OperatorMatrix) -> KrylovDecomposition:
    """Connected components of the graph whose edges are off-diagonal matrix
    elements above `CONNECTIVITY_TOL`, ordered by smallest member index.

    Raises if any retained matrix element crosses two components (this would
    indicate a broken connectivity analysis, and is rechecked exactly).
    """
    pattern = _edge_pattern(op)
    ncomp, raw_owner = _cs_components(pattern, directed=False)
    comps = [np.flatnonzero(raw_owner == c) for c in range(ncomp)]
    comps.sort(key=lambda idx: int(idx[0]))
    coo = op.tocsr().tocoo()
    mask = np.abs(coo.data) > CONNECTIVITY_TOL
    if np.any(raw_owner[coo.row[mask]] != raw_owner[coo.col[mask]]):
        raise AssertionError("component closure violated")
    owner = np.empty(op.dim, dtype=np.int64)
    for i, c in enumerate(comps):
        owner[c] = i
    labels = tuple(_component_labels(op, c) for c in comps)
    return KrylovDecomposition(op.basis, tuple(comps), labels, owner)


def component_states(
    model: EffectiveModel, spec: ChainSpec, initial: ProductState, max_size: int | None = None
) -> list[int]:
    """Breadth-first closure of `initial` under the model's allowed flips,
    as ascending integer-encoded states.

    Works directly on the move structure, so it handles chains too long for
    full-basis enumeration.
    """
    moves = effective_moves(model, spec)
    start = initial.to_int()
    seen = {start}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for _, s2, _ in moves(s):
            if s2 not in seen:
                seen.add(s2)
                queue.append(s2)
                if max_size is not None and len(seen) >= max_size:
                    return sorted(seen)
    return sorted(seen)


@dataclass(frozen=True)
class SortedBasis:
    """Basis permutation exposing the fragment block structure, with block
    boundary markers at each sorting level (positions where a new block
    starts, in the permuted ordering)."""

    permutation: np.ndarray
    v0_boundaries: np.ndarray
    class_boundaries: np.ndarray
    v1_boundaries: np.ndarray
    primary_block_size: int


_CLASS_ORDER = {ConfigClass.ODD: 0, ConfigClass.EVEN: 1, ConfigClass.MIXED: 2}


def sorted_basis(op: OperatorMatrix, spec: ChainSpec | None = None) -> SortedBasis:
    """Three-stage stable sort of the basis: ascending V0 pair count, then
    configuration class (odd, even, mixed) inside the primary V0 block, then
    ascending V1 pair count, with lexicographic tie-breaking."""
    spec = spec or op.spec
    if spec is None:
        raise ValueError("sorted_basis needs a ChainSpec")
    basis = op.basis
    n = basis.n_sites
    states = basis.states
    v0 = pair_count(states, n, 1, periodic=spec.periodic)
    v1 = pair_count(states, n, 2, periodic=spec.periodic) if n >= 2 else np.zeros(len(basis), int)
    cls = np.zeros(len(basis), dtype=np.int64)
    for i in np.flatnonzero(v0 == 0):
        cls[i] = _CLASS_ORDER[classify_configuration(basis[int(i)])]
    # lexicographic tiebreak is the state integer itself (last key = primary)
    perm = np.lexsort((states, v1, cls * (v0 == 0), v0))
    sv0 = v0[perm]
    sgroup = (cls * (v0 == 0))[perm]
    sv1 = v1[perm]

    def starts(keys) -> np.ndarray:
        if len(keys[0]) == 0:
            return np.zeros(0, dtype=np.int64)
        change = np.zeros(len(keys[0]), dtype=bool)
        change[0] = True
        for k in keys:
            change[1:] |= k[1:] != k[:-1]
        return np.flatnonzero(change)

    return SortedBasis(
        permutation=perm,
        v0_boundaries=starts([sv0]),
        class_boundaries=starts([sv0, sgroup]),
        v1_boundaries=starts([sv0, sgroup, sv1]),
        primary_block_size=int(np.sum(v0 == 0)),
    )


def find_frozen_states(op: OperatorMatrix) -> list[ProductState]:
    """Basis states whose matrix row and column are entirely zero
    (singleton Krylov components)."""
    pattern = _edge_pattern(op)
    degree = np.asarray(pattern.sum(axis=0)).ravel() + np.asarray(pattern.sum(axis=1)).ravel()
    return [op.basis[int(i)] for i in np.flatnonzero(degree == 0)]


def frozen_state_count_scan(
    model_factory, n_range, boundary: str = "open"
) -> list[tuple[int, int]]:
    """Count frozen states of a model for each chain length in `n_range`.

    `model_factory` maps a chain length to an EffectiveModel (a fixed model
    instance is also accepted).
    """
    out = []
    for n in n_range:
        model = model_factory(n) if callable(model_factory) else model_factory
        spec = ChainSpec(n=n, boundary=boundary, interactions=(0.0,) * 3)
        moves = effective_moves(model, spec)
        count = sum(1 for s in range(1 << n) if not moves(s))
        out.append((n, count))
    return out


def _excitations_int(state: int, n: int) -> list[int]:
    return [i for i in range(1, n + 1) if (state >> (n - i)) & 1]


def count_domain_walls(state, spec: ChainSpec) -> int:
    """Number of domain walls of a blockade-respecting configuration.

    A domain wall is an even-length cluster of ground sites between
    consecutive excitations: such a cluster separates subchains whose
    excitations occupy opposite sublattices, and no allowed two-drive move
    changes any gap's parity, so the count is exactly conserved.  On rings
    the gaps are cyclic (a single excitation owns the full wrap-around gap);
    even rings host an even number of walls and the conventional count is
    the number of wall pairs, while odd rings (which have no global
    sublattice) report the raw wall count.
    """
    ps = state if isinstance(state, ProductState) else ProductState.from_int(int(state), spec.n)
    if len(ps) != spec.n:
        raise ValueError("state length does not match spec")
    v = ps.to_int()
    n = spec.n
    if pair_count(v, n, 1, periodic=spec.periodic) != 0:
        raise ConfigurationError("state lies outside the primary V0 block")
    exc = _excitations_int(v, n)
    if not exc:
        return 0
    if not spec.periodic:
        return sum(1 for x, y in zip(exc, exc[1:]) if (y - x) % 2 == 1)
    m = len(exc)
    walls = 0
    for i in range(m):
        x = exc[i]
        y = exc[(i + 1) % m]
        gap = (y - x - 1) if i < m - 1 else (y + n - x - 1) if m > 1 else n - 1
        if gap % 2 == 0:
            walls += 1
    if n % 2 == 0:
        if walls % 2:
            raise AssertionError("odd wall count on an even ring")
        return walls // 2
    return walls


def subchain_parities(state, spec: ChainSpec) -> tuple[int, ...]:
    """Sublattice parity (1 odd, 0 even) of each excitation subchain, left to
    right; consecutive excitations with an odd-length gap share a subchain."""
    ps = state if isinstance(state, ProductState) else ProductState.from_int(int(state), spec.n)
    exc = list(ps.excitations())
    if not exc:
        return ()
    pars = [exc[0] % 2]
    for x, y in zip(exc, exc[1:]):
        if (y - x) % 2 == 1:  # even gap: new subchain
            pars.append(y % 2)
    return tuple(pars)


def leftmost_subchain_parity(state, spec: ChainSpec) -> int | None:
    pars = subchain_parities(state, spec)
    return pars[0] if pars else None


@dataclass(frozen=True)
class MatrixPlot:
    """Magnitude grid of a permuted operator over an index window, plus the
    block boundaries falling inside the window."""

    grid: np.ndarray
    window: tuple[int, int]
    boundaries: tuple[np.ndarray, ...]

    def write_text(self, path) -> None:
        lo, hi = self.window
        with open(path, "w") as fh:
            fh.write(f"# |H_ij| over permuted basis indices [{lo}, {hi})\n")
            for row in self.grid:
                fh.write(" ".join(f"{v:.6g}" for v in row) + "\n")


def matrix_plot(
    op: OperatorMatrix,
    order: SortedBasis | None = None,
    window: tuple[int, int] | None = None,
) -> MatrixPlot:
    """|H_ij| over the permuted basis, restricted to an index window."""
    perm = order.permutation if order is not None else np.arange(op.dim)
    lo, hi = window if window is not None else (0, op.dim)
    if not (0 <= lo < hi <= op.dim):
        raise ValueError(f"window {window} outside dimension {op.dim}")
    idx = perm[lo:hi]
    if op.is_sparse:
        sub = op.matrix.tocsr()[idx][:, idx].toarray()
    else:
        sub = op.matrix[np.ix_(idx, idx)]
    grid = np.abs(sub)
    bounds = []
    if order is not None:
        for b in (order.v0_boundaries, order.class_boundaries, order.v1_boundaries):
            bounds.append(b[(b >= lo) & (b < hi)] - lo)
    return MatrixPlot(grid=grid, window=(lo, hi), boundaries=tuple(bounds))
