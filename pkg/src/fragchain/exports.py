"""File emitters: trace CSV, sparse-structure SVG heatmaps, dense SVG
heatmaps, amplitude dumps, and the run manifest."""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

__all__ = [
    "write_trace_csv",
    "write_site_trace_csv",
    "write_spectrum_csv",
    "matrix_svg",
    "heatmap_svg",
    "write_amplitudes",
    "sha256_file",
    "write_manifest",
]


def _metadata_header(fh, metadata):
    for k, v in (metadata or {}).items():
        fh.write(f"# {k}: {v}\n")


def write_trace_csv(path, trace, extra_columns=None) -> None:
    """Scalar trace with a metadata header block."""
    with open(path, "w") as fh:
        fh.write(f"# observable: {trace.observable}\n")
        if trace.subarray:
            fh.write(f"# subarray: {trace.subarray}\n")
        _metadata_header(fh, trace.metadata)
        names = ["t_us", trace.observable or "value"]
        extra = extra_columns or {}
        names += list(extra)
        fh.write(",".join(names) + "\n")
        for i, (t, v) in enumerate(zip(trace.times, trace.values)):
            row = [f"{t:.9g}", f"{float(v):.9g}"]
            row += [f"{float(col[i]):.9g}" for col in extra.values()]
            fh.write(",".join(row) + "\n")


def write_site_trace_csv(path, times, site_values, metadata=None) -> None:
    """Per-sample CSV with one <Q_i> column per site."""
    site_values = np.asarray(site_values)
    n = site_values.shape[1]
    with open(path, "w") as fh:
        _metadata_header(fh, metadata)
        fh.write("t_us," + ",".join(f"q{i}" for i in range(1, n + 1)) + "\n")
        for t, row in zip(times, site_values):
            fh.write(f"{t:.9g}," + ",".join(f"{v:.9g}" for v in row) + "\n")


def write_spectrum_csv(path, freqs, power, metadata=None) -> None:
    with open(path, "w") as fh:
        _metadata_header(fh, metadata)
        fh.write("f_MHz,intensity\n")
        for f, p in zip(freqs, power):
            fh.write(f"{f:.9g},{p:.9g}\n")


_VIRIDIS = [
    (0.267, 0.005, 0.329),
    (0.283, 0.141, 0.458),
    (0.254, 0.265, 0.530),
    (0.207, 0.372, 0.553),
    (0.164, 0.471, 0.558),
    (0.128, 0.567, 0.551),
    (0.135, 0.659, 0.518),
    (0.267, 0.749, 0.441),
    (0.478, 0.821, 0.318),
    (0.741, 0.873, 0.150),
    (0.993, 0.906, 0.144),
]


def _color(x: float) -> str:
    x = min(max(float(x), 0.0), 1.0)
    pos = x * (len(_VIRIDIS) - 1)
    i = min(int(pos), len(_VIRIDIS) - 2)
    f = pos - i
    rgb = [(1 - f) * a + f * b for a, b in zip(_VIRIDIS[i], _VIRIDIS[i + 1])]
    return "#%02x%02x%02x" % tuple(int(round(255 * v)) for v in rgb)


def matrix_svg(path, grid, boundaries=(), cell: float = 4.0, title: str = "") -> None:
    """Sparsity-style heatmap: one rectangle per nonzero cell over a dark
    background, with block boundary lines.  Suited to constrained-model
    matrices, which are extremely sparse."""
    grid = np.asarray(grid)
    nr, nc = grid.shape
    w, h = nc * cell, nr * cell
    vmax = grid.max() if grid.size and grid.max() > 0 else 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h + 18:.0f}" '
        f'viewBox="0 0 {w:.0f} {h + 18:.0f}">',
        f'<rect x="0" y="0" width="{w:.0f}" height="{h:.0f}" fill="{_color(0.0)}"/>',
    ]
    rows, cols = np.nonzero(grid)
    for r, c in zip(rows, cols):
        parts.append(
            f'<rect x="{c * cell:.1f}" y="{r * cell:.1f}" width="{cell:.1f}" '
            f'height="{cell:.1f}" fill="{_color(grid[r, c] / vmax)}"/>'
        )
    styles = ["#ff5555", "#ffaa00", "#ffffff"]
    widths = [1.6, 1.0, 0.5]
    for level, marks in enumerate(boundaries):
        color = styles[min(level, len(styles) - 1)]
        lw = widths[min(level, len(widths) - 1)]
        for m in marks:
            p = m * cell
            parts.append(f'<line x1="{p:.1f}" y1="0" x2="{p:.1f}" y2="{h:.1f}" stroke="{color}" stroke-width="{lw}"/>')
            parts.append(f'<line x1="0" y1="{p:.1f}" x2="{w:.1f}" y2="{p:.1f}" stroke="{color}" stroke-width="{lw}"/>')
    if title:
        parts.append(f'<text x="2" y="{h + 13:.0f}" font-size="11" fill="#000000">{title}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def heatmap_svg(path, values, cell: float = 10.0, title: str = "", vmin=None, vmax=None) -> None:
    """Dense heatmap (e.g. site-resolved dynamics), one rect per cell."""
    values = np.asarray(values, dtype=float)
    nr, nc = values.shape
    vmin = values.min() if vmin is None else vmin
    vmax = values.max() if vmax is None else vmax
    span = (vmax - vmin) or 1.0
    w, h = nc * cell, nr * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h + 18:.0f}" '
        f'viewBox="0 0 {w:.0f} {h + 18:.0f}">'
    ]
    for r in range(nr):
        for c in range(nc):
            parts.append(
                f'<rect x="{c * cell:.1f}" y="{r * cell:.1f}" width="{cell:.1f}" '
                f'height="{cell:.1f}" fill="{_color((values[r, c] - vmin) / span)}"/>'
            )
    if title:
        parts.append(f'<text x="2" y="{h + 13:.0f}" font-size="11" fill="#000000">{title}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def write_amplitudes(path, psi) -> str:
    """Binary amplitude dump keyed by a hash of the basis ordering; returns
    the basis hash."""
    basis_hash = hashlib.sha256(np.ascontiguousarray(psi.basis.states).tobytes()).hexdigest()[:16]
    np.savez(path, amplitudes=psi.amplitudes, basis_states=psi.basis.states,
             n_sites=psi.basis.n_sites, basis_hash=basis_hash)
    return basis_hash


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(outdir, workflow, config_text, seed, outputs) -> str:
    """JSON manifest: embedded config, its hash, seed, versions, and a
    content hash per output file.  Identical configs reproduce identical
    output hashes."""
    import scipy

    from . import __version__

    doc = {
        "workflow": workflow,
        "seed": seed,
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "config_text": config_text,
        "versions": {
            "fragchain": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "outputs": {name: sha256_file(os.path.join(outdir, name)) for name in sorted(outputs)},
    }
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    return path
