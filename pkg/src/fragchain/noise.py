"""Monte Carlo realism layer: atomic position disorder, Doppler detunings,
and state-preparation-and-measurement (SPAM) errors, with seed-deterministic
trajectory averaging."""

from __future__ import annotations

from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .builders import DENSE_LIMIT, DriveSpec, build_ffm, build_rydberg
from .chain import ChainSpec, ProductState
from .evolution import (
    EvolutionPlan,
    calibrate_ffm_step,
    evolve_ffm,
    evolve_static,
    product_state_vector,
)
from .observables import site_expectations

__all__ = [
    "NoiseSpec",
    "Realization",
    "DisorderScale",
    "interaction_disorder",
    "sample_realization",
    "spam_channel",
    "spam_adjusted_q",
    "EnsembleTrace",
    "ensemble_trace",
    "trajectory_rng",
]

MAX_RESAMPLES = 1000


@dataclass(frozen=True)
class NoiseSpec:
    """Disorder and readout-error parameters.

    sigma_r is the per-atom position spread along the chain axis (um);
    sigma_doppler a per-atom detuning spread (rad/us); spam_g / spam_r the
    probabilities that a ground / Rydberg atom is read out correctly.
    """

    sigma_r: float = 0.0
    sigma_doppler: float = 0.0
    spam_g: float = 1.0
    spam_r: float = 1.0
    seed: int = 0
    n_trajectories: int = 1

    def __post_init__(self):
        if self.sigma_r < 0 or self.sigma_doppler < 0:
            raise ValueError("spreads must be nonnegative")
        for p in (self.spam_g, self.spam_r):
            if not 0.0 <= p <= 1.0:
                raise ValueError("readout fidelities must lie in [0, 1]")
        if self.n_trajectories < 1:
            raise ValueError("need at least one trajectory")


DisorderScale = namedtuple("DisorderScale", ["sigma_v", "metric"])


def interaction_disorder(spec: ChainSpec, noise: NoiseSpec, k: int, omega: float | None = None) -> DisorderScale:
    """First-order interaction spread 6 |V_{k-1}| sigma_r / (k a) and, when a
    Rabi frequency is supplied, the localization metric sigma_V / Omega."""
    if k < 1:
        raise ValueError("k must be >= 1")
    sigma_v = 6.0 * abs(spec.coupling(k)) * noise.sigma_r / (k * spec.a)
    metric = sigma_v / omega if omega else None
    return DisorderScale(sigma_v, metric)


@dataclass(frozen=True)
class Realization:
    """One disorder draw: perturbed positions (um), the pairwise couplings
    they imply, per-atom Doppler detunings, and the rejection count."""

    positions: tuple[float, ...]
    pair_couplings: dict
    detunings: tuple[float, ...]
    resamples: int


def _pair_distance(positions, i, j, spec: ChainSpec) -> float:
    if j > spec.n:  # wrapped pair on a ring
        return positions[(j - 1) % spec.n] + spec.n * spec.a - positions[i - 1]
    return positions[j - 1] - positions[i - 1]


def sample_realization(spec: ChainSpec, noise: NoiseSpec, rng: np.random.Generator) -> Realization:
    """Draw one disordered chain: independent normal axial displacements of
    spread sigma_r per atom, couplings recomputed from the perturbed
    separations via the inverse-sixth-power law, and independent normal
    Doppler detunings.  Draws with a non-positive perturbed separation are
    rejected and redrawn (the count is reported)."""
    c6 = spec.c6 if spec.c6 is not None else spec.coupling(1) * spec.a**6
    base = spec.a * np.arange(spec.n)
    resamples = 0
    while True:
        pos = base + rng.normal(0.0, noise.sigma_r, size=spec.n) if noise.sigma_r else base.copy()
        if spec.n == 1 or np.all(np.diff(pos) > 0):
            break
        resamples += 1
        if resamples > MAX_RESAMPLES:
            raise RuntimeError("position disorder keeps collapsing atom order")
    couplings = {}
    for j in spec.interaction_orders():
        for i in range(1, spec.n - j + 1):
            d = _pair_distance(pos, i, i + j, spec)
            couplings[(i, i + j)] = c6 / d**6
        if spec.periodic:
            for i in range(spec.n - j + 1, spec.n + 1):
                d = _pair_distance(pos, i, i + j, spec)
                couplings[(i, (i + j - 1) % spec.n + 1)] = c6 / d**6
    if noise.sigma_doppler:
        detunings = tuple(rng.normal(0.0, noise.sigma_doppler, size=spec.n))
    else:
        detunings = (0.0,) * spec.n
    return Realization(tuple(pos), couplings, detunings, resamples)


def spam_channel(samples: np.ndarray, noise: NoiseSpec, rng: np.random.Generator, n_sites: int) -> np.ndarray:
    """Independent per-site readout flips applied to integer bitstrings:
    g reads as r with probability 1 - spam_g, r as g with 1 - spam_r."""
    samples = np.asarray(samples, dtype=np.int64).copy()
    for k in range(n_sites):
        bit = np.int64(1 << k)
        is_r = (samples & bit) > 0
        flip_r = is_r & (rng.random(samples.shape) > noise.spam_r)
        flip_g = (~is_r) & (rng.random(samples.shape) > noise.spam_g)
        samples ^= bit * (flip_r | flip_g)
    return samples


def spam_adjusted_q(q: np.ndarray, noise: NoiseSpec) -> np.ndarray:
    """Analytic readout confusion map on Rydberg-state probabilities:
    the expected measured occupation given true occupation q."""
    return q * noise.spam_r + (1.0 - q) * (1.0 - noise.spam_g)


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Deterministic per-trajectory stream, independent of worker layout."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(index + 1)[index])


@dataclass(frozen=True)
class EnsembleTrace:
    """Trajectory means and standard errors, one row block per observable."""

    times: np.ndarray
    means: dict
    stderrs: dict
    n_trajectories: int

    def write_csv(self, path, metadata: dict | None = None) -> None:
        names = sorted(self.means)
        with open(path, "w") as fh:
            fh.write(f"# trajectories: {self.n_trajectories}\n")
            for k, v in (metadata or {}).items():
                fh.write(f"# {k}: {v}\n")
            cols = ["t_us"]
            for name in names:
                width = self.means[name].shape[1] if self.means[name].ndim > 1 else 1
                if width == 1:
                    cols += [name, f"{name}_stderr"]
                else:
                    cols += [f"{name}_{i+1}" for i in range(width)]
                    cols += [f"{name}_{i+1}_stderr" for i in range(width)]
            fh.write(",".join(cols) + "\n")
            for row, t in enumerate(self.times):
                cells = [f"{t:.9g}"]
                for name in names:
                    if self.means[name].ndim == 1:
                        cells += [f"{self.means[name][row]:.9g}", f"{self.stderrs[name][row]:.9g}"]
                    else:
                        cells += [f"{x:.9g}" for x in self.means[name][row]]
                        cells += [f"{x:.9g}" for x in self.stderrs[name][row]]
                fh.write(",".join(cells) + "\n")


def _default_observables():
    return {"q_sites": site_expectations}


def _run_trajectory(args):
    (spec, drive, initial, plan, noise, observables, index, step) = args
    rng = trajectory_rng(noise.seed, index)
    realization = sample_realization(spec, noise, rng)
    if drive.ffm is not None:
        op = build_ffm(spec, drive, realization=realization)
        states = evolve_ffm(op, product_state_vector(op.basis, initial), plan, step=step)
    else:
        op = build_rydberg(spec, drive, realization=realization)
        states = evolve_static(op, product_state_vector(op.basis, initial), plan)
    rows = {}
    for name, func in observables.items():
        rows[name] = np.array([func(st) for st in states])
    return index, rows


def ensemble_trace(
    spec: ChainSpec,
    drive: DriveSpec,
    initial: ProductState,
    plan: EvolutionPlan,
    noise: NoiseSpec,
    observables: dict | None = None,
    workers: int = 1,
) -> EnsembleTrace:
    """Trajectory-averaged observables with per-time standard errors.

    Each trajectory draws its own disorder realization from a stream spawned
    deterministically from (seed, trajectory index), so results are
    reproducible and independent of the worker count; accumulation follows
    trajectory order.  For modulated drives the step-convergence probe runs
    once (trajectory 0) and the calibrated step is reused.
    """
    observables = observables or _default_observables()
    step = None
    if plan.probe:
        # calibrate the split-step once (trajectory 0) and share it
        rng0 = trajectory_rng(noise.seed, 0)
        real0 = sample_realization(spec, noise, rng0)
        if drive.ffm is not None:
            op0 = build_ffm(spec, drive, realization=real0)
        else:
            op0 = build_rydberg(spec, drive, realization=real0)
        if op0.time_dependent or op0.dim > DENSE_LIMIT:
            step = calibrate_ffm_step(op0, product_state_vector(op0.basis, initial), plan)
            plan = replace(plan, probe=False, max_step=step)
    tasks = [
        (spec, drive, initial, plan, noise, observables, i, step)
        for i in range(noise.n_trajectories)
    ]
    results = [None] * noise.n_trajectories
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, rows in pool.map(_run_trajectory, tasks, chunksize=4):
                results[index] = rows
    else:
        for t in tasks:
            index, rows = _run_trajectory(t)
            results[index] = rows
    means, stderrs = {}, {}
    for name in observables:
        stack = np.stack([r[name] for r in results])  # (ntraj, nsamples, ...)
        means[name] = stack.mean(axis=0)
        n = stack.shape[0]
        spread = stack.std(axis=0, ddof=1) if n > 1 else np.zeros_like(stack[0])
        stderrs[name] = spread / np.sqrt(n)
    return EnsembleTrace(plan.sample_times, means, stderrs, noise.n_trajectories)
