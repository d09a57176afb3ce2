"""Product states, chain geometry, constrained-basis enumeration, and
classical configuration analysis.

States are strings over {'g', 'r'} with sites numbered 1..N from the left.
Internally a state is a nonnegative integer whose most significant bit is
site 1 ('g' = 0, 'r' = 1), so ascending integers coincide with lexicographic
order of the state strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Iterator

import numpy as np

__all__ = [
    "BasisSizeError",
    "ConfigurationError",
    "ProductState",
    "ChainSpec",
    "ConfigClass",
    "Basis",
    "enumerate_basis",
    "primary_v0_block",
    "classical_energy",
    "classify_configuration",
    "hamming_distance",
    "site_bit",
    "popcount",
    "pair_count",
    "BASIS_CAP",
]

BASIS_CAP = 24  # hard cap on full-basis enumeration (2^24 states)


class BasisSizeError(ValueError):
    """Requested enumeration exceeds the configured size cap."""


class ConfigurationError(ValueError):
    """State violates a precondition of a configuration-level operation."""


def site_bit(state: int, site: int, n: int) -> int:
    """Occupation (0/1) of 1-based `site` in integer `state` of an n-site chain."""
    return (state >> (n - site)) & 1


def popcount(states):
    """Number of set bits, elementwise for arrays or for a python int."""
    if isinstance(states, (int, np.integer)):
        return int(states).bit_count()
    return np.bitwise_count(np.asarray(states, dtype=np.uint64)).astype(np.int64)


def pair_count(states, n: int, j: int, periodic: bool = False):
    """Count occupied pairs at site separation j (vectorised over `states`).

    Open boundaries count pairs (i, i+j) with i+j <= n; periodic boundaries
    also count the wrapped pairs, each unordered pair once (requires j < n).
    """
    s = np.asarray(states, dtype=np.uint64)
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    straight = np.bitwise_count(s & (s >> np.uint64(j)))
    if periodic:
        mask = np.uint64((1 << n) - 1)
        rot = ((s << np.uint64(j)) | (s >> np.uint64(n - j))) & mask
        total = np.bitwise_count(s & rot)
    else:
        total = straight
    total = total.astype(np.int64)
    return int(total[0]) if scalar else total


@dataclass(frozen=True)
class ProductState:
    """An N-site classical spin configuration ('g' ground, 'r' Rydberg)."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if not self.bits or any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be a nonempty tuple of 0/1")

    @classmethod
    def from_string(cls, s: str) -> "ProductState":
        if set(s) - {"g", "r"}:
            raise ValueError(f"invalid state string {s!r}")
        return cls(tuple(1 if c == "r" else 0 for c in s))

    @classmethod
    def from_sites(cls, n: int, excited: Iterable[int]) -> "ProductState":
        """State with Rydberg excitations on the given 1-based sites."""
        excited = set(excited)
        if any(i < 1 or i > n for i in excited):
            raise ValueError("excited sites out of range")
        return cls(tuple(1 if i in excited else 0 for i in range(1, n + 1)))

    @classmethod
    def from_int(cls, value: int, n: int) -> "ProductState":
        return cls(tuple((value >> (n - i)) & 1 for i in range(1, n + 1)))

    @classmethod
    def all_ground(cls, n: int) -> "ProductState":
        return cls((0,) * n)

    def to_string(self) -> str:
        return "".join("r" if b else "g" for b in self.bits)

    def to_int(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v

    @property
    def n_sites(self) -> int:
        return len(self.bits)

    def excitations(self) -> tuple[int, ...]:
        """1-based sites in the Rydberg state."""
        return tuple(i for i, b in enumerate(self.bits, start=1) if b)

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return self.to_string()


@dataclass(frozen=True)
class ChainSpec:
    """Geometry and interaction law of an equidistant chain.

    Interactions may be given either as an explicit tuple ``V_0..V_{kmax-1}``
    or through a van der Waals coefficient ``c6`` with
    ``V_{j-1} = c6 / (j*a)**6``.  All energies are angular frequencies in
    rad/us; `a` is in um.
    """

    n: int
    boundary: str = "open"
    a: float = 3.73
    c6: float | None = None
    interactions: tuple[float, ...] | None = None
    kmax: int = 3

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.a <= 0:
            raise ValueError("spacing must be positive")
        if self.kmax < 1:
            raise ValueError("kmax must be >= 1")
        if self.interactions is not None:
            object.__setattr__(self, "interactions", tuple(float(v) for v in self.interactions))
            if len(self.interactions) < self.kmax:
                raise ValueError("interactions must supply V_0..V_{kmax-1}")

    @classmethod
    def from_v0(cls, n: int, a: float, v0: float, boundary: str = "open", kmax: int = 3) -> "ChainSpec":
        """Infer c6 from a measured nearest-neighbour interaction at spacing a."""
        return cls(n=n, boundary=boundary, a=a, c6=v0 * a**6, kmax=kmax)

    @classmethod
    def from_v1(cls, n: int, a: float, v1: float, boundary: str = "open", kmax: int = 3) -> "ChainSpec":
        """Infer c6 from the next-nearest-neighbour interaction at spacing a."""
        return cls(n=n, boundary=boundary, a=a, c6=v1 * (2 * a) ** 6, kmax=kmax)

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def coupling(self, j: int) -> float:
        """Interaction V_{j-1} between sites at separation j (1 <= j <= kmax)."""
        if not 1 <= j <= self.kmax:
            raise ValueError(f"separation order j={j} outside 1..{self.kmax}")
        if self.interactions is not None:
            return self.interactions[j - 1]
        if self.c6 is None:
            raise ValueError("spec carries neither explicit interactions nor c6")
        return self.c6 / (j * self.a) ** 6

    def couplings(self) -> tuple[float, ...]:
        return tuple(self.coupling(j) for j in range(1, self.kmax + 1))

    def interaction_orders(self) -> range:
        """Separations j that contribute pairs; periodic rings cap j below n/2
        so each unordered pair is counted once."""
        top = self.kmax
        if self.periodic:
            top = min(top, (self.n - 1) // 2)
        else:
            top = min(top, self.n - 1)
        return range(1, top + 1)


class ConfigClass(Enum):
    """Sublattice class of a blockade-respecting configuration."""

    ODD = "odd"
    EVEN = "even"
    MIXED = "mixed"


@dataclass(frozen=True)
class Basis:
    """An ordered basis of product states over an n-site chain.

    `states` is an ascending int64 array of integer-encoded states; ascending
    integer order is lexicographic order of the state strings.
    """

    n_sites: int
    states: np.ndarray
    _positions: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        states = np.ascontiguousarray(np.asarray(self.states, dtype=np.int64))
        object.__setattr__(self, "states", states)
        if states.size > 1 and np.any(np.diff(states) <= 0):
            raise ValueError("basis states must be strictly ascending")

    @classmethod
    def full(cls, n: int) -> "Basis":
        if n > BASIS_CAP:
            raise BasisSizeError(f"n={n} exceeds enumeration cap {BASIS_CAP}")
        return cls(n, np.arange(1 << n, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.states.size)

    def __iter__(self) -> Iterator[ProductState]:
        for v in self.states:
            yield ProductState.from_int(int(v), self.n_sites)

    def __getitem__(self, i: int) -> ProductState:
        return ProductState.from_int(int(self.states[i]), self.n_sites)

    @property
    def is_full(self) -> bool:
        return len(self) == (1 << self.n_sites)

    def position(self, state) -> int:
        """Index of a state (ProductState or int) in this basis."""
        v = state.to_int() if isinstance(state, ProductState) else int(state)
        if self.is_full:
            if not 0 <= v < len(self):
                raise KeyError(f"state {v} outside full basis")
            return v
        i = int(np.searchsorted(self.states, v))
        if i >= len(self) or self.states[i] != v:
            raise KeyError(f"state {v} not in basis")
        return i

    def positions(self, values: np.ndarray) -> np.ndarray:
        """Vectorised `position` for an int array; -1 marks absent states."""
        values = np.asarray(values, dtype=np.int64)
        if self.is_full:
            return values.copy()
        idx = np.searchsorted(self.states, values)
        idx = np.clip(idx, 0, len(self) - 1)
        found = self.states[idx] == values
        return np.where(found, idx, -1)

    def contains(self, state) -> bool:
        try:
            self.position(state)
            return True
        except KeyError:
            return False

    def to_strings(self) -> list[str]:
        return [s.to_string() for s in self]

    def write(self, path) -> None:
        """Newline-delimited state-string export."""
        with open(path, "w") as fh:
            for s in self:
                fh.write(s.to_string() + "\n")


def enumerate_basis(
    spec: ChainSpec,
    predicate: Callable[[ProductState], bool] | None = None,
    cap: int = BASIS_CAP,
) -> Basis:
    """Enumerate all 2^N product states (or a filtered subset), ascending.

    Parameters
    ----------
    spec : ChainSpec
        Supplies the site count.
    predicate : callable, optional
        Keep states for which ``predicate(state)`` is true.
    cap : int
        Enumeration refuses chains longer than this (memory guard).
    """
    if spec.n > cap:
        raise BasisSizeError(f"n={spec.n} exceeds enumeration cap {cap}")
    values = np.arange(1 << spec.n, dtype=np.int64)
    if predicate is None:
        return Basis(spec.n, values)
    keep = np.fromiter(
        (predicate(ProductState.from_int(int(v), spec.n)) for v in values),
        dtype=bool,
        count=values.size,
    )
    return Basis(spec.n, values[keep])


def primary_v0_block(spec: ChainSpec) -> Basis:
    """States with zero nearest-neighbour interaction energy (no adjacent
    excitations; on a ring this includes the wrap pair)."""
    if spec.n > BASIS_CAP:
        raise BasisSizeError(f"n={spec.n} exceeds enumeration cap {BASIS_CAP}")
    values = np.arange(1 << spec.n, dtype=np.int64)
    ok = pair_count(values, spec.n, 1, periodic=spec.periodic) == 0
    return Basis(spec.n, values[ok])


def classical_energy(state: ProductState, spec: ChainSpec, order: int) -> int:
    """Number of occupied site pairs at separation `order` (multiply by
    V_{order-1} for the interaction energy); respects the boundary condition.
    """
    if not 1 <= order <= spec.kmax:
        raise ValueError(f"order {order} outside 1..{spec.kmax}")
    if len(state) != spec.n:
        raise ValueError("state length does not match spec")
    if order >= spec.n:
        return 0
    return pair_count(state.to_int(), spec.n, order, periodic=spec.periodic)


def classify_configuration(state: ProductState) -> ConfigClass:
    """Sublattice class of a state in the primary V0 block.

    ODD (EVEN) when every excitation sits on an odd (even) 1-based site;
    MIXED otherwise.  The all-ground state is ODD by convention.  States
    with adjacent excitations have no class and raise.
    """
    v = state.to_int()
    if v & (v >> 1):
        raise ConfigurationError("state has adjacent excitations (nonzero V0 energy)")
    exc = state.excitations()
    if not exc:
        return ConfigClass.ODD
    if all(i % 2 == 1 for i in exc):
        return ConfigClass.ODD
    if all(i % 2 == 0 for i in exc):
        return ConfigClass.EVEN
    return ConfigClass.MIXED


def hamming_distance(s1: ProductState, s2: ProductState) -> int:
    """Number of sites at which two equal-length states differ."""
    if len(s1) != len(s2):
        raise ValueError("states have different lengths")
    return popcount(s1.to_int() ^ s2.to_int())
