"""Output files for a test run: trace and histogram CSVs, an SVG histogram."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import stats

from .mcmc import Histogram


def sig6(value: Any) -> Any:
    """Round floats (recursively) to 6 significant digits for JSON output."""
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v) or math.isinf(v):
            return None
        return float(f"{v:.6g}")
    if isinstance(value, dict):
        return {k: sig6(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sig6(v) for v in value]
    if isinstance(value, np.ndarray):
        return sig6(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(sig6(payload), indent=2, sort_keys=False) + "\n")


def write_trace(path: Path, trace: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "g2"])
        for k, v in enumerate(trace):
            w.writerow([k, repr(float(v))])


def write_histogram_csv(path: Path, hist: Histogram, df: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "count", "chi2_density_at_midpoint"])
        for lo, hi, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
            mid = 0.5 * (lo + hi)
            w.writerow([f"{lo:.6g}", f"{hi:.6g}", int(c), f"{stats.chi2.pdf(mid, df):.6g}"])


def histogram_svg(hist: Histogram, df: int, observed: float, title: str = "",
                  width: int = 640, height: int = 400) -> str:
    """Bars scaled to a density, the chi-squared density as a polyline,
    and a dashed marker at the observed statistic."""
    left, right, top, bottom = 56, 16, 32, 40
    pw, ph = width - left - right, height - top - bottom
    lo, hi = float(hist.edges[0]), float(hist.edges[-1])
    widths = np.diff(hist.edges)
    total = max(int(hist.counts.sum()), 1)
    dens = hist.counts / (total * widths)
    xs = np.linspace(max(lo, 1e-9), hi, 200)
    curve = stats.chi2.pdf(xs, df)
    # the density at 0 diverges for df = 1; clip the axis to the bars
    ymax = max(float(dens.max()), float(np.nanmax(np.minimum(curve, 2 * dens.max() + 1e-12))), 1e-12) * 1.05

    def px(v):
        return left + (v - lo) / (hi - lo) * pw

    def py(v):
        return top + ph - min(v, ymax) / ymax * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
    ]
    for a, b, d in zip(hist.edges[:-1], hist.edges[1:], dens):
        x0, x1 = px(a), px(b)
        y = py(d)
        out.append(f'<rect x="{x0:.2f}" y="{y:.2f}" width="{max(x1 - x0 - 0.5, 0.5):.2f}" '
                   f'height="{top + ph - y:.2f}" fill="#9db4d3" stroke="#4a6a94" stroke-width="0.5"/>')
    pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, curve))
    out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>')
    if lo <= observed <= hi:
        ox = px(observed)
        out.append(f'<line x1="{ox:.2f}" y1="{top}" x2="{ox:.2f}" y2="{top + ph}" stroke="#c0392b" '
                   f'stroke-dasharray="4,3" stroke-width="1.5"/>')
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    for k in range(6):
        v = lo + (hi - lo) * k / 5
        out.append(f'<text x="{px(v):.2f}" y="{top + ph + 16}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{v:.3g}</text>')
        w = ymax * k / 5
        out.append(f'<text x="{left - 6}" y="{py(w) + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{w:.3g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 6}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12">G2</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
