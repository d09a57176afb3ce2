"""Reproducible experiment drivers.

Each workflow reads a validated config, runs one figure-class analysis, and
writes data files (CSV/JSON) plus SVG heatmaps into an artifact directory.
`WORKFLOWS` maps workflow names to (validator, runner, description).
"""

from __future__ import annotations

import json
import os

import numpy as np

from .builders import (
    DriveSpec,
    EffectiveModel,
    FfmSpec,
    build_effective,
    build_ffm,
    build_rydberg,
)
from .chain import Basis, ChainSpec, ProductState
from .config import ConfigError, ParsedConfig
from .evolution import EvolutionPlan, evolve_ffm, evolve_static, product_state_vector, sample_grid
from .exports import (
    heatmap_svg,
    matrix_svg,
    write_site_trace_csv,
    write_spectrum_csv,
    write_trace_csv,
)
from .fragmentation import (
    component_states,
    connected_components,
    find_frozen_states,
    matrix_plot,
    sorted_basis,
)
from .noise import NoiseSpec, ensemble_trace, interaction_disorder, spam_adjusted_q
from .observables import (
    ObservableTrace,
    SubarraySpec,
    fourier_spectrum,
    ground_density,
    microstate_histogram,
    single_site_entropy,
    site_expectations,
    spectrum_peak,
    staggered_magnetization,
    subarray_a,
    subarray_a_prime,
    subarray_b,
    trace_from_states,
)
from .scars import fit_oscillation, z6_scar_check
from .thermal import build_ensemble, ensemble_expectation, time_average
from .units import from_mhz, to_mhz

__all__ = ["WORKFLOWS", "run_workflow", "run_scan", "workflow_names"]


# ---------------------------------------------------------------- helpers

def _chain(cfg: ParsedConfig, default_n=13, default_a=3.73, default_kmax=3) -> ChainSpec:
    n = cfg.integer("chain", "n", default_n)
    boundary = cfg.string("chain", "boundary", "open", choices={"open", "periodic"})
    a = cfg.length("chain", "spacing", default_a)
    kmax = cfg.integer("chain", "kmax", default_kmax)
    if cfg.has("chain", "c6"):
        return ChainSpec(n=n, boundary=boundary, a=a, c6=cfg.c6("chain", "c6"), kmax=kmax)
    if cfg.has("chain", "v0"):
        return ChainSpec.from_v0(n, a, cfg.frequency("chain", "v0"), boundary, kmax)
    if cfg.has("chain", "v1"):
        return ChainSpec.from_v1(n, a, cfg.frequency("chain", "v1"), boundary, kmax)
    raise ConfigError("chain section needs one of c6, v0, v1", cfg.path)


def _initial(cfg: ParsedConfig, n: int, default_sites) -> ProductState:
    sites = cfg.integers("workflow", "initial_sites", tuple(default_sites))
    return ProductState.from_sites(n, sites)


def _plan(cfg: ParsedConfig, default_t_end, omega, tol=1e-8) -> EvolutionPlan:
    t_end = cfg.time("evolution", "t_end", default_t_end)
    n_samples = cfg.integer("evolution", "samples", None)
    if n_samples:
        times = np.linspace(0.0, t_end, n_samples)
    else:
        times = sample_grid(t_end, omega)
    max_step = cfg.time("evolution", "max_step", None)
    return EvolutionPlan(
        t_end=t_end,
        sample_times=times,
        tol=cfg.number("evolution", "tolerance", tol),
        max_step=max_step,
    )


def _noise(cfg: ParsedConfig, seed: int) -> NoiseSpec:
    return NoiseSpec(
        sigma_r=cfg.length("noise", "sigma_r", 0.0),
        sigma_doppler=cfg.frequency("noise", "sigma_doppler", 0.0),
        spam_g=cfg.number("noise", "spam_g", 1.0),
        spam_r=cfg.number("noise", "spam_r", 1.0),
        seed=seed,
        n_trajectories=cfg.integer("noise", "trajectories", 1),
    )


def _component_operator(model, spec, initial):
    comp = component_states(model, spec, initial)
    basis = Basis(spec.n, np.asarray(comp, dtype=np.int64))
    return build_effective(model, spec, basis), basis


def _write_json(outdir, name, payload):
    with open(os.path.join(outdir, name), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------- fragment

def _fragment_params(cfg):
    spec = _chain(cfg)
    k = cfg.integer("workflow", "k", 2)
    omega = cfg.frequency("drive", "omega", from_mhz(1.45))
    window = cfg.integer("workflow", "plot_window", None)
    return spec, k, omega, window


def wf_fragment(cfg: ParsedConfig, outdir: str):
    spec, k, omega, window = _fragment_params(cfg)
    model = EffectiveModel.qpxpq(omega, k=k)
    op = build_effective(model, spec)
    decomp = connected_components(op)
    order = sorted_basis(op, spec)
    frozen = find_frozen_states(op)

    files = []
    report = os.path.join(outdir, "components.txt")
    decomp.write_report(report, member_dir=os.path.join(outdir, "members"))
    files.append("components.txt")

    hi = window or order.primary_block_size
    plot = matrix_plot(op, order, (0, hi))
    plot.write_text(os.path.join(outdir, "matrix_plot.txt"))
    matrix_svg(
        os.path.join(outdir, "matrix_plot.svg"),
        plot.grid,
        plot.boundaries,
        cell=max(1.0, 600.0 / hi),
        title=f"|H| on the sorted primary block (dim {hi})",
    )
    files += ["matrix_plot.txt", "matrix_plot.svg"]

    with open(os.path.join(outdir, "frozen_states.txt"), "w") as fh:
        for s in frozen:
            fh.write(s.to_string() + "\n")
    files.append("frozen_states.txt")

    summary = {
        "n_components": len(decomp),
        "primary_block_size": order.primary_block_size,
        "n_frozen": len(frozen),
        "largest_component": max(decomp.sizes()),
    }
    _write_json(outdir, "summary.json", summary)
    files.append("summary.json")
    return files, summary


# ---------------------------------------------------------------- scars

def _scar_traces(op, psi0, plan, sub):
    states = evolve_static(op, psi0, plan)
    m = trace_from_states(plan.sample_times, states,
                          lambda p: staggered_magnetization(p, sub),
                          name="M", subarray=sub.name)
    q = np.array([site_expectations(p) for p in states])
    return states, m, q


def _scar_z4_params(cfg):
    spec = _chain(cfg)
    omega = cfg.frequency("drive", "omega", from_mhz(1.45))
    delta = cfg.frequency("drive", "delta", 2 * spec.coupling(2))
    with_full = cfg.boolean("workflow", "full_model", True)
    return spec, omega, delta, with_full


def wf_scar_z4(cfg: ParsedConfig, outdir: str):
    """Period-4 scar: effective k=2 constrained model vs the full chain."""
    spec, omega, delta, with_full = _scar_z4_params(cfg)
    z4 = _initial(cfg, spec.n, range(1, spec.n + 1, 4))
    plan = _plan(cfg, 3.0, omega, tol=1e-6)
    sub = subarray_a(spec.n)
    files = []

    model = EffectiveModel.qpxpq(omega, k=2)
    op_eff, basis = _component_operator(model, spec, z4)
    _, m_eff, q_eff = _scar_traces(op_eff, product_state_vector(basis, z4), plan, sub)
    write_trace_csv(os.path.join(outdir, "m_a_effective.csv"), m_eff)
    files.append("m_a_effective.csv")
    freqs, power = fourier_spectrum(m_eff)
    write_spectrum_csv(os.path.join(outdir, "spectrum_effective.csv"), freqs, power)
    files.append("spectrum_effective.csv")
    peak_eff = spectrum_peak(freqs, power)
    fit_eff = fit_oscillation(m_eff)

    summary = {
        "component_dim": len(basis),
        "peak_f_mhz_effective": peak_eff[0],
        "peak_over_omega_effective": peak_eff[0] / to_mhz(omega),
        "tau_effective": fit_eff.tau if fit_eff.converged else None,
    }

    if with_full:
        op_full = build_rydberg(spec, DriveSpec(omega=omega, delta=delta))
        psi0 = product_state_vector(op_full.basis, z4)
        states = evolve_static(op_full, psi0, plan)
        m_full = trace_from_states(plan.sample_times, states,
                                   lambda p: staggered_magnetization(p, sub),
                                   name="M", subarray=sub.name)
        q_full = np.array([site_expectations(p) for p in states])
        write_trace_csv(os.path.join(outdir, "m_a_full.csv"), m_full)
        write_site_trace_csv(os.path.join(outdir, "sites_full.csv"), plan.sample_times, q_full)
        heatmap_svg(os.path.join(outdir, "sites_full.svg"), q_full.T, title="<Q_i>(t), full model",
                    vmin=0.0, vmax=1.0)
        files += ["m_a_full.csv", "sites_full.csv", "sites_full.svg"]
        ffreqs, fpower = fourier_spectrum(m_full)
        write_spectrum_csv(os.path.join(outdir, "spectrum_full.csv"), ffreqs, fpower)
        files.append("spectrum_full.csv")
        fpeak = spectrum_peak(ffreqs, fpower)
        fit_full = fit_oscillation(m_full)
        summary.update(
            peak_f_mhz_full=fpeak[0],
            peak_over_omega_full=fpeak[0] / to_mhz(omega),
            tau_full=fit_full.tau if fit_full.converged else None,
        )

    _write_json(outdir, "summary.json", summary)
    files.append("summary.json")
    return files, summary


def _scar_qxq_params(cfg):
    spec = _chain(cfg, default_a=7.46)
    omega = cfg.frequency("drive", "omega", from_mhz(1.4))
    delta = cfg.frequency("drive", "delta", 2 * spec.coupling(1))
    return spec, omega, delta


def wf_scar_qxq(cfg: ParsedConfig, outdir: str):
    """Facilitated period-2 scar with an interior ordered block; boundary
    atoms and atoms beyond stay frozen."""
    spec, omega, delta = _scar_qxq_params(cfg)
    block = tuple(range(4, spec.n - 2, 2))
    init = _initial(cfg, spec.n, block)
    plan = _plan(cfg, 3.0, omega, tol=1e-6)
    model = EffectiveModel.qxq(omega)
    op_eff, basis = _component_operator(model, spec, init)
    states = evolve_static(op_eff, product_state_vector(basis, init), plan)
    q = np.array([site_expectations(p) for p in states])
    write_site_trace_csv(os.path.join(outdir, "sites_effective.csv"), plan.sample_times, q)
    heatmap_svg(os.path.join(outdir, "sites_effective.svg"), q.T,
                title="<Q_i>(t), facilitated model", vmin=0.0, vmax=1.0)
    sub = SubarraySpec("block", block, index_start=1)
    m = trace_from_states(plan.sample_times, states,
                          lambda p: staggered_magnetization(p, sub),
                          name="M_block", subarray="block")
    write_trace_csv(os.path.join(outdir, "m_block.csv"), m)
    outside = [i for i in range(1, spec.n + 1) if i not in block]
    max_outside = float(q[:, [i - 1 for i in outside]].max())
    summary = {
        "component_dim": len(basis),
        "max_outside_occupation": max_outside,
        "m_block_min": float(np.min(m.values)),
    }
    _write_json(outdir, "summary.json", summary)
    return ["sites_effective.csv", "sites_effective.svg", "m_block.csv", "summary.json"], summary


def _scar_z6_params(cfg):
    n = cfg.integer("chain", "n", 19)
    omega = cfg.frequency("drive", "omega", from_mhz(1.45))
    v2 = cfg.frequency("chain", "v2", from_mhz(4.3))
    with_full = cfg.boolean("workflow", "full_model", True)
    t_end = cfg.time("evolution", "t_end", 2.4)
    return n, omega, v2, with_full, t_end


def wf_scar_z6(cfg: ParsedConfig, outdir: str):
    """Period-6 scar on a k=3 constrained chain; the full-model comparison
    runs on the blockade-truncated basis (states with any nearest- or
    next-nearest-neighbour pair are projected out, an O((omega/V1)^2)
    approximation)."""
    n, omega, v2, with_full, t_end = _scar_z6_params(cfg)
    full_op = None
    if with_full:
        a = cfg.length("chain", "spacing", 3.89)
        spec = ChainSpec(n=n, boundary="open", a=a, c6=v2 * (3 * a) ** 6, kmax=3)
        basis = Basis(
            n,
            np.array(
                [s for s in range(1 << n) if not (s & (s >> 1)) and not (s & (s >> 2))],
                dtype=np.int64,
            ),
        )
        full_op = build_rydberg(
            spec, DriveSpec(omega=omega, delta=2 * v2), basis, allow_open_basis=True
        )
    result = z6_scar_check(n=n, omega=omega, t_end=t_end, full_op=full_op)
    write_trace_csv(os.path.join(outdir, "m_a_effective.csv"), result["m_a"])
    write_spectrum_csv(os.path.join(outdir, "spectrum_effective.csv"), *result["spectrum"])
    files = ["m_a_effective.csv", "spectrum_effective.csv"]
    summary = {
        "participating_sites": result["participating_sites"],
        "component_dim": result["component_dim"],
        "p_b_min": result["p_b_min"],
        "p_c_min": result["p_c_min"],
        "peak_f_mhz": result["peak"][0],
        "peak_height": result["peak"][1],
    }
    if with_full:
        write_trace_csv(os.path.join(outdir, "m_a_full.csv"), result["m_a_full"])
        files.append("m_a_full.csv")
        summary["full_peak_f_mhz"] = result["full_peak"][0]
        summary["full_peak_height"] = result["full_peak"][1]
        summary["p_b_min_full"] = result["p_b_min_full"]
    _write_json(outdir, "summary.json", summary)
    files.append("summary.json")
    return files, summary


# ------------------------------------------------------- KRT thermalization

def _krt_drives(cfg):
    omega = cfg.frequency("drive", "omega", from_mhz(1.48))
    omega_f = cfg.frequency("drive", "omega_f", 0.43 * omega)
    ratio = cfg.number("drive", "omega_fp_ratio", 1.2)
    return omega, omega_f, ratio * omega_f


def _krt_params(cfg):
    spec = _chain(cfg)
    omega, omega_f, omega_fp = _krt_drives(cfg)
    return spec, omega, omega_f, omega_fp


def wf_krt_thermalization(cfg: ParsedConfig, outdir: str):
    """Two-drive restricted thermalization from the period-4 start, with the
    single-drive scar as contrast."""
    spec, omega, omega_f, omega_fp = _krt_params(cfg)
    z4 = _initial(cfg, spec.n, range(1, spec.n + 1, 4))
    plan = _plan(cfg, 3.0, omega_f)
    sub_ap = subarray_a_prime(spec.n)
    sub_b = subarray_b(spec.n)

    model = EffectiveModel.krt(omega_f, omega_fp, k=2)
    op, basis = _component_operator(model, spec, z4)
    psi0 = product_state_vector(basis, z4)
    states = evolve_static(op, psi0, plan)

    m_ap = trace_from_states(plan.sample_times, states,
                             lambda p: staggered_magnetization(p, sub_ap),
                             name="M_Aprime", subarray=sub_ap.name)
    p_b = trace_from_states(plan.sample_times, states,
                            lambda p: ground_density(p, sub_b),
                            name="P_B", subarray=sub_b.name)
    s_ap = trace_from_states(
        plan.sample_times, states,
        lambda p: float(np.mean([single_site_entropy(p, s) for s in sub_ap.sites])),
        name="S_Aprime", subarray=sub_ap.name)

    ens = build_ensemble(op, None, e0=0.0, omega_f=omega_f)
    thermal_m = ensemble_expectation(
        ens, lambda p: staggered_magnetization(p, sub_ap)
    )

    qpxpq = EffectiveModel.qpxpq(omega_f, k=2)
    opq, basq = _component_operator(qpxpq, spec, z4)
    states_q = evolve_static(opq, product_state_vector(basq, z4), plan)
    m_a = trace_from_states(plan.sample_times, states_q,
                            lambda p: staggered_magnetization(p, subarray_a(spec.n)),
                            name="M_A_scar", subarray="A")

    write_trace_csv(os.path.join(outdir, "m_aprime_krt.csv"), m_ap,
                    extra_columns={"thermal": np.full(len(m_ap), thermal_m)})
    write_trace_csv(os.path.join(outdir, "p_b.csv"), p_b)
    write_trace_csv(os.path.join(outdir, "entropy_aprime.csv"), s_ap)
    write_trace_csv(os.path.join(outdir, "m_a_scar.csv"), m_a)
    files = ["m_aprime_krt.csv", "p_b.csv", "entropy_aprime.csv", "m_a_scar.csv"]

    for tag, frac in (("start", 0.0), ("late", 1.0)):
        idx = min(len(states) - 1, int(frac * (len(states) - 1)))
        hist = microstate_histogram(states[idx], basis, z4)
        hist.write_csv(os.path.join(outdir, f"microstates_{tag}.csv"))
        files.append(f"microstates_{tag}.csv")

    late = plan.sample_times >= 2 * plan.t_end / 3
    m_vals = np.asarray(m_ap.values, dtype=float)
    summary = {
        "component_dim": len(basis),
        "thermal_m": thermal_m,
        "late_mean_m": float(m_vals[late].mean()),
        "late_fluctuation": float(m_vals[late].std()),
        "min_p_b": float(np.min(p_b.values)),
        "final_entropy": float(s_ap.values[-1]),
    }
    _write_json(outdir, "summary.json", summary)
    files.append("summary.json")
    return files, summary


# --------------------------------------------------- subspace thermalization

def _subspace_params(cfg):
    spec = _chain(cfg)
    omega, omega_f, omega_fp = _krt_drives(cfg)
    even_sites = cfg.integers("workflow", "even_sites", (2, 8, 12))
    odd_sites = cfg.integers("workflow", "odd_sites", (3, 9, 13))
    window = cfg.numbers("workflow", "average_window", (2.7, 3.0))
    return spec, omega, omega_f, omega_fp, even_sites, odd_sites, window


def wf_subspace_thermalization(cfg: ParsedConfig, outdir: str):
    """Equal-energy starts in different configurational subspaces relax to
    disjoint site profiles (restricted-thermalization signature)."""
    spec, omega, omega_f, omega_fp, even_sites, odd_sites, window = _subspace_params(cfg)
    model = EffectiveModel.krt(omega_f, omega_fp, k=2)
    plan = _plan(cfg, max(window[1], 3.0), omega_f)
    files = []
    summary = {}
    for tag, sites in (("even", even_sites), ("odd", odd_sites)):
        init = ProductState.from_sites(spec.n, sites)
        op, basis = _component_operator(model, spec, init)
        states = evolve_static(op, product_state_vector(basis, init), plan)
        q = np.array([site_expectations(p) for p in states])
        write_site_trace_csv(os.path.join(outdir, f"sites_{tag}.csv"), plan.sample_times, q)
        heatmap_svg(os.path.join(outdir, f"sites_{tag}.svg"), q.T,
                    title=f"<Q_i>(t), start {sites}", vmin=0.0, vmax=1.0)
        files += [f"sites_{tag}.csv", f"sites_{tag}.svg"]
        in_window = (plan.sample_times >= window[0]) & (plan.sample_times <= window[1])
        profile = 1.0 - q[in_window].mean(axis=0)  # ground-state probability
        np.savetxt(os.path.join(outdir, f"pg_profile_{tag}.csv"),
                   np.stack([np.arange(1, spec.n + 1), profile], axis=1),
                   delimiter=",", header="site,p_g", comments="")
        files.append(f"pg_profile_{tag}.csv")
        member_sites = tuple(range(2, spec.n + 1, 2)) if tag == "even" else tuple(range(1, spec.n + 1, 2))
        ens = build_ensemble(op, None, e0=0.0, omega_f=omega_f)
        sub = SubarraySpec(tag, member_sites)
        thermal_pg = ensemble_expectation(ens, lambda p: ground_density(p, sub))
        active = [s - 1 for s in member_sites]
        idle = [i for i in range(spec.n) if i + 1 not in member_sites]
        summary[f"{tag}_thermal_pg"] = thermal_pg
        summary[f"{tag}_late_pg_active"] = float(profile[active].mean())
        summary[f"{tag}_cross_parity_max_q"] = float(q[:, idle].max())
        summary[f"{tag}_component_dim"] = len(basis)
    _write_json(outdir, "summary.json", summary)
    files.append("summary.json")
    return files, summary


# ------------------------------------------------------------- leakage scan

def _leakage_params(cfg):
    omega = cfg.frequency("drive", "omega", from_mhz(1.48))
    ratios = cfg.numbers("workflow", "ratios", (3.0, 5.0, 7.9, 12.0))
    n = cfg.integer("chain", "n", 13)
    a = cfg.length("chain", "spacing", 3.73)
    cycles = cfg.number("workflow", "rabi_cycles", 3.0)
    alpha = cfg.number("drive", "modulation_depth", 2.4)
    return omega, ratios, n, a, cycles, alpha


def leakage_point(n, a, omega, ratio, cycles, alpha, tol=1e-5, samples=121):
    """Minimum bulk ground density under the modulated drive at one
    interaction-to-drive ratio."""
    omega_f = 0.43 * omega
    v1 = ratio * omega_f
    spec = ChainSpec.from_v1(n, a, v1, "open", kmax=3)
    drive = DriveSpec(omega=omega, delta=0.0, ffm=FfmSpec(delta0=alpha * v1, omega_d=v1))
    op = build_ffm(spec, drive)
    z4 = ProductState.from_sites(n, range(1, n + 1, 4))
    t_end = cycles * 2 * np.pi / omega_f
    plan = EvolutionPlan(t_end=t_end, sample_times=np.linspace(0.0, t_end, samples), tol=tol)
    states = evolve_ffm(op, product_state_vector(op.basis, z4), plan)
    sub_b = subarray_b(n)
    p_b = np.array([ground_density(p, sub_b) for p in states])
    return plan.sample_times, p_b


def wf_leakage_scan(cfg: ParsedConfig, outdir: str):
    """Minimum P_B against V1/Omega_F: off-resonant leakage out of the
    configurational subspace shrinks as the separation of scales grows."""
    omega, ratios, n, a, cycles, alpha = _leakage_params(cfg)
    tol = cfg.number("evolution", "tolerance", 1e-5)
    rows = []
    files = []
    for r in ratios:
        times, p_b = leakage_point(n, a, omega, r, cycles, alpha, tol=tol)
        trace = ObservableTrace(times, p_b, observable="P_B", subarray="B",
                                metadata={"v1_over_omega_f": r})
        fname = f"p_b_ratio_{r:g}.csv"
        write_trace_csv(os.path.join(outdir, fname), trace)
        files.append(fname)
        rows.append((r, float(p_b.min())))
    with open(os.path.join(outdir, "min_p_b.csv"), "w") as fh:
        fh.write("v1_over_omega_f,min_p_b\n")
        for r, v in rows:
            fh.write(f"{r:g},{v:.9g}\n")
    files.append("min_p_b.csv")
    summary = {f"min_p_b_at_{r:g}": v for r, v in rows}
    summary["monotone"] = bool(all(rows[i][1] < rows[i + 1][1] for i in range(len(rows) - 1)))
    _write_json(outdir, "summary.json", summary)
    files.append("summary.json")
    return files, summary


# ---------------------------------------------------------------- disorder

def _disorder_params(cfg):
    spec = _chain(cfg, default_n=15, default_a=7.46)
    omega = cfg.frequency("drive", "omega", from_mhz(1.37))
    delta = cfg.frequency("drive", "delta", spec.coupling(1))
    seeds = cfg.integers("workflow", "initial_sites", (7, 8))
    delay = cfg.time("workflow", "readout_delay", 0.2)
    return spec, omega, delta, seeds, delay


def front_spread(q_profile: np.ndarray, center: float) -> float:
    """Excitation-weighted RMS distance from the seed center, in sites."""
    sites = np.arange(1, q_profile.size + 1)
    weight = q_profile.sum()
    if weight <= 0:
        return 0.0
    return float(np.sqrt(np.sum((sites - center) ** 2 * q_profile) / weight))


def wf_disorder_spread(cfg: ParsedConfig, outdir: str):
    """Facilitated spreading of two seeded excitations under position
    disorder: the front keeps moving (no localization at the operating
    disorder metric)."""
    spec, omega, delta, seeds, delay = _disorder_params(cfg)
    seed = cfg.integer("run", "seed", 0)
    noise = _noise(cfg, seed)
    workers = cfg.integer("noise", "workers", 1)
    plan = _plan(cfg, 1.6, omega, tol=1e-6)
    init = ProductState.from_sites(spec.n, seeds)
    drive = DriveSpec(omega=omega, delta=delta)
    ens = ensemble_trace(spec, drive, init, plan, noise, workers=workers)
    q = ens.means["q_sites"]
    times = ens.times + delay  # preparation-to-probe gap offsets the clock
    write_site_trace_csv(os.path.join(outdir, "sites_mean.csv"), times, q,
                         metadata={"trajectories": noise.n_trajectories})
    heatmap_svg(os.path.join(outdir, "sites_mean.svg"), q.T,
                title="mean <Q_i>(t) under position disorder", vmin=0.0, vmax=1.0)
    q_spam = spam_adjusted_q(q, noise)
    write_site_trace_csv(os.path.join(outdir, "sites_mean_readout.csv"), times, q_spam,
                         metadata={"spam_g": noise.spam_g, "spam_r": noise.spam_r})
    center = float(np.mean(seeds))
    spread = np.array([front_spread(row, center) for row in q])
    write_trace_csv(os.path.join(outdir, "front_spread.csv"),
                    ObservableTrace(times, spread, observable="front_spread"))
    thirds = np.array_split(np.arange(len(times)), 3)
    means = [float(spread[ix].mean()) for ix in thirds]
    metric = interaction_disorder(spec, noise, 1, omega=omega).metric
    summary = {
        "spread_thirds": means,
        "monotone_spread": bool(means[0] < means[1] < means[2]),
        "final_spread": float(spread[-1]),
        "disorder_metric": metric,
    }
    _write_json(outdir, "summary.json", summary)
    return [
        "sites_mean.csv",
        "sites_mean.svg",
        "sites_mean_readout.csv",
        "front_spread.csv",
        "summary.json",
    ], summary


# ---------------------------------------------------------------- registry

WORKFLOWS = {
    "fragment": (_fragment_params, wf_fragment,
                 "Krylov decomposition, sorted-basis matrix plot, frozen states"),
    "scar_z4": (_scar_z4_params, wf_scar_z4,
                "period-4 scar: effective vs full chain, spectra and fits"),
    "scar_qxq": (_scar_qxq_params, wf_scar_qxq,
                 "facilitated period-2 scar with frozen boundaries"),
    "scar_z6": (_scar_z6_params, wf_scar_z6,
                "period-6 scar on a k=3 chain, with frozen subarrays"),
    "krt_thermalization": (_krt_params, wf_krt_thermalization,
                           "two-drive restricted thermalization vs scar contrast"),
    "subspace_thermalization": (_subspace_params, wf_subspace_thermalization,
                                "equal-energy starts relaxing to disjoint profiles"),
    "leakage_scan": (_leakage_params, wf_leakage_scan,
                     "min P_B against the interaction-to-drive ratio"),
    "disorder_spread": (_disorder_params, wf_disorder_spread,
                        "facilitated excitation spread under position disorder"),
}


def workflow_names() -> list[str]:
    return sorted(WORKFLOWS)


def run_workflow(cfg: ParsedConfig, outdir: str):
    name = cfg.string("run", "workflow", required=True)
    if name not in WORKFLOWS:
        raise ConfigError(f"unknown workflow {name!r}; known: {workflow_names()}", cfg.path)
    os.makedirs(outdir, exist_ok=True)
    _, runner, _ = WORKFLOWS[name]
    return name, runner(cfg, outdir)


def validate_config(cfg: ParsedConfig) -> str:
    name = cfg.string("run", "workflow", required=True)
    if name not in WORKFLOWS:
        raise ConfigError(f"unknown workflow {name!r}; known: {workflow_names()}", cfg.path)
    validator, _, _ = WORKFLOWS[name]
    validator(cfg)
    if cfg.has("scan", "parameter"):
        key = cfg.string("scan", "parameter")
        if "." not in key:
            raise cfg.error("parameter", "scan parameter must be 'section.key'")
        cfg.raw("scan", "values", required=True)
    return name


def run_scan(cfg: ParsedConfig, outdir: str):
    """Sweep one or two config keys; each grid point runs the workflow into
    its own subdirectory and contributes one summary row."""
    params = []
    for slot in ("parameter", "parameter2"):
        if cfg.has("scan", slot):
            key = cfg.string("scan", slot)
            if "." not in key:
                raise cfg.error(slot, "scan parameter must be 'section.key'")
            values = cfg.raw("scan", "values" if slot == "parameter" else "values2", required=True)
            params.append((key, [v.strip() for v in values.split(",")]))
    if not params:
        raise ConfigError("scan section needs a 'parameter' entry", cfg.path)
    os.makedirs(outdir, exist_ok=True)
    grids = [(a, b) for a in params[0][1] for b in (params[1][1] if len(params) > 1 else [None])]
    rows = []
    all_files = []
    for va, vb in grids:
        sub = cfg.with_override(*params[0][0].split(".", 1), va)
        tag = f"{params[0][0].split('.')[1]}_{va}"
        if vb is not None:
            sub = sub.with_override(*params[1][0].split(".", 1), vb)
            tag += f"_{params[1][0].split('.')[1]}_{vb}"
        subdir = os.path.join(outdir, tag)
        os.makedirs(subdir, exist_ok=True)
        name, (files, summary) = run_workflow(sub, subdir)
        rows.append((va, vb, summary))
        all_files += [os.path.join(tag, f) for f in files]
    keys = sorted({k for _, _, s in rows for k in s})
    table = os.path.join(outdir, "scan_table.csv")
    with open(table, "w") as fh:
        head = [params[0][0]] + ([params[1][0]] if len(params) > 1 else [])
        fh.write(",".join(head + keys) + "\n")
        for va, vb, s in rows:
            cells = [va] + ([vb] if len(params) > 1 else [])
            cells += [str(s.get(k, "")) for k in keys]
            fh.write(",".join(cells) + "\n")
    all_files.append("scan_table.csv")
    return all_files, rows
