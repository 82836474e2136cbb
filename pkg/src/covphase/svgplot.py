"""Minimal deterministic SVG rendering of already-written CSV output.

Plots are derived artifacts: everything is re-read from the CSV files so
the picture can never disagree with the data on disk.  The writer is
hand-rolled to keep byte-identical output for identical inputs.
"""

from __future__ import annotations

from pathlib import Path

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]

WIDTH = 720
PLOT_H = 300
STRIP_H = 120
MARGIN = 50


def _read_csv(path):
    columns = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        if columns is None:
            columns = line.split(",")
        else:
            rows.append([float(tok) for tok in line.split(",")])
    return columns or [], rows


def _polyline(points, color):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'


def render_simulation_svg(trajectory_csv, phase_csv, out_path) -> Path:
    """Line plot of delta_phi(t) over a heat strip of p(phi, t)."""
    columns, rows = _read_csv(trajectory_csv)
    _, phase_rows = _read_csv(phase_csv)
    t_idx = columns.index("t")
    dphi_cols = [(i, c[len("delta_phi_") :]) for i, c in enumerate(columns) if c.startswith("delta_phi_")]
    times = [r[t_idx] for r in rows]
    t_lo, t_hi = min(times), max(times)
    t_span = (t_hi - t_lo) or 1.0

    series = []
    v_lo, v_hi = float("inf"), float("-inf")
    for i, name in dphi_cols:
        vals = [r[i] for r in rows]
        finite = [v for v in vals if v == v and abs(v) != float("inf")]
        if finite:
            v_lo = min(v_lo, min(finite))
            v_hi = max(v_hi, max(finite))
        series.append((name, vals))
    if v_lo > v_hi:
        v_lo, v_hi = 0.0, 1.0
    v_span = (v_hi - v_lo) or 1.0

    def sx(t):
        return MARGIN + (t - t_lo) / t_span * (WIDTH - 2 * MARGIN)

    def sy(v):
        return MARGIN + (v_hi - v) / v_span * (PLOT_H - 2 * MARGIN)

    height = PLOT_H + STRIP_H + MARGIN
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}">',
        f'<rect width="{WIDTH}" height="{height}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{PLOT_H - 2 * MARGIN}" fill="none" stroke="#999"/>',
    ]
    for j, (name, vals) in enumerate(series):
        color = PALETTE[j % len(PALETTE)]
        pts = [
            (sx(t), sy(v))
            for t, v in zip(times, vals)
            if v == v and abs(v) != float("inf")
        ]
        if pts:
            parts.append(_polyline(pts, color))
        parts.append(
            f'<text x="{MARGIN + 8 + 150 * j}" y="{MARGIN - 8:.0f}" '
            f'font-family="monospace" font-size="12" fill="{color}">{name}</text>'
        )
    parts.append(
        f'<text x="{MARGIN}" y="{PLOT_H + 2:.0f}" font-family="monospace" '
        f'font-size="12" fill="#333">t in [{t_lo:.6g}, {t_hi:.6g}]; '
        f'delta_phi in [{v_lo:.6g}, {v_hi:.6g}]</text>'
    )

    # heat strip: rows are sample times (x), columns are phases (y)
    if phase_rows:
        p_lo = min(min(r) for r in phase_rows)
        p_hi = max(max(r) for r in phase_rows)
        p_span = (p_hi - p_lo) or 1.0
        n_t = len(phase_rows)
        n_phi = len(phase_rows[0])
        cell_w = (WIDTH - 2 * MARGIN) / n_t
        cell_h = (STRIP_H - 20) / n_phi
        y0 = PLOT_H + 20
        for i, row in enumerate(phase_rows):
            for j, p in enumerate(row):
                shade = 255 - int(round(215 * (p - p_lo) / p_span))
                parts.append(
                    f'<rect x="{MARGIN + i * cell_w:.2f}" y="{y0 + j * cell_h:.2f}" '
                    f'width="{cell_w + 0.5:.2f}" height="{cell_h + 0.5:.2f}" '
                    f'fill="rgb({shade},{shade},255)"/>'
                )
        parts.append(
            f'<text x="{MARGIN}" y="{y0 + STRIP_H - 24:.0f}" font-family="monospace" '
            f'font-size="12" fill="#333">p(phi, t): phi downward, t rightward, '
            f'range [{p_lo:.6g}, {p_hi:.6g}]</text>'
        )

    parts.append("</svg>")
    out_path = Path(out_path)
    out_path.write_text("\n".join(parts) + "\n")
    return out_path
