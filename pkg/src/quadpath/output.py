"""Run artifacts: CSV telemetry, static SVG plots, JSON report and MANIFEST."""
from __future__ import annotations

import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .simulator import Metrics, ScenarioConfig, SimLog

CHANNELS = ("s", "e1", "e2", "dphi")
BASE_COLUMNS = (
    "t", "x", "y", "z", "vx", "vy", "vz", "phi", "theta", "psi",
    "phi_dot", "theta_dot", "psi_dot", "s", "e1", "e2", "delta_phi", "s_dot", "dist",
    "u1", "u2", "u3", "u4", "F1", "F2", "F3", "F4",
)
OBSERVER_COLUMNS = tuple(f"xi_hat{k}_{ch}" for k in range(1, 5) for ch in CHANNELS) + tuple(
    f"sigma_hat_{ch}" for ch in CHANNELS)


def csv_columns(mode: str) -> tuple[str, ...]:
    return BASE_COLUMNS + (OBSERVER_COLUMNS if mode == "output" else ())


def log_table(log: SimLog) -> np.ndarray:
    """The log as one row per sample, in :func:`csv_columns` order."""
    parts = [log.t[:, None], log.plant, log.deviation[:, :4], log.s_dot[:, None],
             log.dist[:, None], log.controls, log.forces]
    if log.mode == "output":
        parts.append(log.observer)
    return np.hstack(parts)


def emit_csv(log: SimLog, path) -> Path:
    if len(log) == 0:
        raise ValueError("empty log")
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_columns(log.mode))
        # repr() of a Python float is the shortest string that parses back exactly
        writer.writerows([repr(v) for v in row] for row in log_table(log).tolist())
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


# --- SVG ---------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")
WIDTH, HEIGHT, MARGIN = 720, 420, 60
MAX_POINTS = 2000


def _thin(x: np.ndarray, y: np.ndarray):
    if len(x) <= MAX_POINTS:
        return x, y
    idx = np.unique(np.linspace(0, len(x) - 1, MAX_POINTS).astype(int))
    return x[idx], y[idx]


def _range(values: Sequence[np.ndarray]):
    allv = np.concatenate([np.asarray(v, float).ravel() for v in values])
    allv = allv[np.isfinite(allv)]
    lo, hi = (float(allv.min()), float(allv.max())) if allv.size else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_plot(series: list[tuple[str, np.ndarray, np.ndarray]], title: str,
              xlabel: str, ylabel: str, equal_aspect: bool = False) -> ET.ElementTree:
    """One ``<polyline>`` per series, with a frame, tick labels and a legend."""
    xlo, xhi = _range([s[1] for s in series])
    ylo, yhi = _range([s[2] for s in series])
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    if equal_aspect:
        scale = min(pw / (xhi - xlo), ph / (yhi - ylo))
        xmid, ymid = 0.5 * (xlo + xhi), 0.5 * (ylo + yhi)
        xlo, xhi = xmid - 0.5 * pw / scale, xmid + 0.5 * pw / scale
        ylo, yhi = ymid - 0.5 * ph / scale, ymid + 0.5 * ph / scale

    def sx(v):
        return MARGIN + (v - xlo) / (xhi - xlo) * pw

    def sy(v):
        return HEIGHT - MARGIN - (v - ylo) / (yhi - ylo) * ph

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(WIDTH),
                     height=str(HEIGHT), viewBox=f"0 0 {WIDTH} {HEIGHT}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    ET.SubElement(svg, "rect", x=str(MARGIN), y=str(MARGIN), width=str(pw), height=str(ph),
                  fill="none", stroke="#444")
    text_style = {"font-family": "sans-serif", "font-size": "12"}
    ET.SubElement(svg, "text", x=str(WIDTH / 2), y="24", **{"text-anchor": "middle"},
                  **text_style).text = title
    ET.SubElement(svg, "text", x=str(WIDTH / 2), y=str(HEIGHT - 16), **{"text-anchor": "middle"},
                  **text_style).text = xlabel
    ET.SubElement(svg, "text", x="16", y=str(HEIGHT / 2), transform=f"rotate(-90 16 {HEIGHT / 2})",
                  **{"text-anchor": "middle"}, **text_style).text = ylabel
    for frac in (0.0, 0.5, 1.0):
        xv, yv = xlo + frac * (xhi - xlo), ylo + frac * (yhi - ylo)
        ET.SubElement(svg, "text", x=f"{sx(xv):.1f}", y=str(HEIGHT - MARGIN + 16),
                      **{"text-anchor": "middle"}, **text_style).text = f"{xv:.3g}"
        ET.SubElement(svg, "text", x=str(MARGIN - 6), y=f"{sy(yv) + 4:.1f}",
                      **{"text-anchor": "end"}, **text_style).text = f"{yv:.3g}"
    for i, (label, x, y) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        x, y = _thin(np.asarray(x, float), np.asarray(y, float))
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        poly = ET.SubElement(svg, "polyline", points=pts, fill="none", stroke=color,
                             **{"stroke-width": "1.5"})
        poly.set("data-series", label)
        ly = MARGIN + 14 + 16 * i
        ET.SubElement(svg, "line", x1=str(WIDTH - MARGIN - 110), y1=str(ly - 4),
                      x2=str(WIDTH - MARGIN - 90), y2=str(ly - 4), stroke=color,
                      **{"stroke-width": "2"})
        ET.SubElement(svg, "text", x=str(WIDTH - MARGIN - 84), y=str(ly), **text_style).text = label
    return ET.ElementTree(svg)


def emit_plots(log: SimLog, metrics: Optional[Metrics], out_dir, curve_points=None) -> list[Path]:
    """Deviation traces, XY and XZ path projections, control traces."""
    if len(log) == 0:
        raise ValueError("empty log")
    out_dir = Path(out_dir)
    t = log.t
    dev = log.deviation
    subtitle = "" if metrics is None else (
        " (objectives met)" if metrics.objectives_met else " (objectives not met)")
    plots = {
        "deviations.svg": line_plot(
            [("e1 [m]", t, dev[:, 1]), ("e2 [m]", t, dev[:, 2]),
             ("dist [m]", t, log.dist), ("delta_phi [rad]", t, dev[:, 3])],
            "Deviation from the path" + subtitle, "t [s]", "deviation"),
        "controls.svg": line_plot(
            [(f"u{i + 1}", t, log.controls[:, i]) for i in range(4)],
            "Virtual controls", "t [s]", "u"),
    }
    P = log.plant[:, :3]
    for name, (a, b) in {"path_xy.svg": (0, 1), "path_xz.svg": (0, 2)}.items():
        series = []
        if curve_points is not None:
            series.append(("reference", curve_points[:, a], curve_points[:, b]))
        series.append(("flight", P[:, a], P[:, b]))
        axes = "xyz"
        plots[name] = line_plot(series, f"Path, {axes[a]}{axes[b]} projection",
                                f"{axes[a]} [m]", f"{axes[b]} [m]", equal_aspect=True)
    written = []
    for name, tree in plots.items():
        path = out_dir / name
        tree.write(path, encoding="utf-8", xml_declaration=True)
        written.append(path)
    return written


def reference_points(cfg: ScenarioConfig, log: SimLog, n: int = 800) -> np.ndarray:
    """Curve samples spanning the flown stretch of path (with a small margin)."""
    curve = cfg.curve.build()
    s = log.deviation[:, 0]
    lo, hi = float(s.min()), float(s.max())
    pad = 0.1 * max(hi - lo, 1.0)
    lo, hi = lo - pad, hi + pad
    if not curve.periodic:
        lo, hi = max(lo, curve.s_range[0]), min(hi, curve.s_range[1])
    return np.array([curve.point(v) for v in np.linspace(lo, hi, n)])


def write_json(data: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=False) + "\n")
    return path


def write_manifest(out_dir, files: Sequence[Path], status: str, detail: str = "") -> Path:
    out_dir = Path(out_dir)
    lines = [f"status: {status}"]
    if detail:
        lines.append(f"detail: {detail}")
    lines += [f"file: {Path(f).relative_to(out_dir)}" for f in files]
    path = out_dir / "MANIFEST"
    path.write_text("\n".join(lines) + "\n")
    return path
