"""Small SVG line plotter for the standard run and identification plots.

Only what the artifacts need: stacked panels of time series, an x/y track
with arrows, and a scatter. Output is plain SVG 1.1 text.
"""

from __future__ import annotations

import math
from html import escape
from pathlib import Path

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
W, PANEL_H = 760, 220
ML, MR, MT, MB = 70, 20, 30, 40
MAX_POINTS = 4000


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _limits(arrays, pad: float = 0.05) -> tuple[float, float]:
    vals = [np.asarray(a, dtype=float) for a in arrays]
    vals = [v[np.isfinite(v)] for v in vals]
    vals = [v for v in vals if v.size]
    if not vals:
        return 0.0, 1.0
    lo = min(float(v.min()) for v in vals)
    hi = max(float(v.max()) for v in vals)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    d = (hi - lo) * pad
    return lo - d, hi + d


def _decimate(x, y):
    step = max(1, len(x) // MAX_POINTS)
    return x[::step], y[::step]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class _Panel:
    def __init__(self, x0, y0, w, h, xlim, ylim):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xlim, self.ylim = xlim, ylim

    def X(self, x):
        return self.x0 + (np.asarray(x, dtype=float) - self.xlim[0]) / (self.xlim[1] - self.xlim[0]) * self.w

    def Y(self, y):
        return self.y0 + self.h - (np.asarray(y, dtype=float) - self.ylim[0]) / (self.ylim[1] - self.ylim[0]) * self.h

    def frame(self, title, xlabel, ylabel) -> list[str]:
        o = [f'<rect x="{self.x0}" y="{self.y0}" width="{self.w}" height="{self.h}" fill="none" stroke="#333"/>']
        for tx in nice_ticks(*self.xlim):
            X = float(self.X(tx))
            o.append(f'<line x1="{X:.1f}" y1="{self.y0}" x2="{X:.1f}" y2="{self.y0 + self.h}" stroke="#ddd"/>')
            o.append(f'<text x="{X:.1f}" y="{self.y0 + self.h + 14}" font-size="10" text-anchor="middle">{_fmt(tx)}</text>')
        for ty in nice_ticks(*self.ylim):
            Y = float(self.Y(ty))
            o.append(f'<line x1="{self.x0}" y1="{Y:.1f}" x2="{self.x0 + self.w}" y2="{Y:.1f}" stroke="#ddd"/>')
            o.append(f'<text x="{self.x0 - 4}" y="{Y + 3:.1f}" font-size="10" text-anchor="end">{_fmt(ty)}</text>')
        o.append(f'<text x="{self.x0 + self.w / 2}" y="{self.y0 - 8}" font-size="12" text-anchor="middle">{escape(title)}</text>')
        o.append(f'<text x="{self.x0 + self.w / 2}" y="{self.y0 + self.h + 30}" font-size="11" text-anchor="middle">{escape(xlabel)}</text>')
        yc = self.y0 + self.h / 2
        o.append(f'<text x="{self.x0 - 50}" y="{yc}" font-size="11" text-anchor="middle" '
                 f'transform="rotate(-90 {self.x0 - 50} {yc})">{escape(ylabel)}</text>')
        return o

    def polyline(self, x, y, color, dash=False) -> str:
        x, y = _decimate(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(self.X(x[ok]), self.Y(y[ok])))
        extra = ' stroke-dasharray="5,3"' if dash else ""
        return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"{extra}/>'

    def legend(self, labels) -> list[str]:
        o = []
        for i, label in enumerate(labels):
            y = self.y0 + 12 + 13 * i
            c = COLORS[i % len(COLORS)]
            o.append(f'<line x1="{self.x0 + 8}" y1="{y}" x2="{self.x0 + 26}" y2="{y}" stroke="{c}" stroke-width="2"/>')
            o.append(f'<text x="{self.x0 + 30}" y="{y + 4}" font-size="10">{escape(label)}</text>')
        return o


def _document(width, height, body) -> str:
    return "\n".join([f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
                      f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
                      f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>", ""])


def time_panels(path, t, panels, xlabel: str = "time [s]") -> Path:
    """``panels`` is a list of (title, ylabel, [(label, y, dashed), ...])."""
    t = np.asarray(t, dtype=float)
    height = len(panels) * (PANEL_H + MT + MB)
    body = []
    xlim = _limits([t], pad=0.0)
    for k, (title, ylabel, series) in enumerate(panels):
        ylim = _limits([s[1] for s in series])
        p = _Panel(ML, k * (PANEL_H + MT + MB) + MT, W - ML - MR, PANEL_H, xlim, ylim)
        body += p.frame(title, xlabel, ylabel)
        for i, (label, y, dashed) in enumerate(series):
            body.append(p.polyline(t, y, COLORS[i % len(COLORS)], dashed))
        body += p.legend([s[0] for s in series])
    return _write(path, _document(W, height, body))


def track(path, east, north, arrows=None, title: str = "track (top view)", lines=None) -> Path:
    """Top view, east right and north up, equal axis scale.

    ``arrows`` is (east, north, d_east, d_north, scale) for e.g. airspeed
    vectors; ``lines`` an optional list of ((e0, n0), (e1, n1)) plan segments.
    """
    east = np.asarray(east, dtype=float)
    north = np.asarray(north, dtype=float)
    elim = _limits([east])
    nlim = _limits([north])
    span = max(elim[1] - elim[0], nlim[1] - nlim[0])
    ec, nc = 0.5 * sum(elim), 0.5 * sum(nlim)
    side = W - ML - MR
    p = _Panel(ML, MT, side, side, (ec - span / 2, ec + span / 2), (nc - span / 2, nc + span / 2))
    body = p.frame(title, "east [m]", "north [m]")
    for a, b in lines or []:
        body.append(p.polyline([a[0], b[0]], [a[1], b[1]], "#999", dash=True))
    body.append(p.polyline(east, north, COLORS[0]))
    if arrows is not None:
        ae, an, de, dn, scale = arrows
        for e0, n0, e1, n1 in zip(p.X(ae), p.Y(an), p.X(np.asarray(ae) + scale * np.asarray(de)),
                                  p.Y(np.asarray(an) + scale * np.asarray(dn))):
            body.append(f'<line x1="{e0:.1f}" y1="{n0:.1f}" x2="{e1:.1f}" y2="{n1:.1f}" stroke="{COLORS[1]}" '
                        f'stroke-width="1"/><circle cx="{e1:.1f}" cy="{n1:.1f}" r="1.5" fill="{COLORS[1]}"/>')
    return _write(path, _document(W, side + MT + MB, body))


def scatter_fit(path, measured, predicted, title: str, label: str = "") -> Path:
    """Predicted against measured with the identity line."""
    m = np.asarray(measured, dtype=float)
    pr = np.asarray(predicted, dtype=float)
    lim = _limits([m, pr])
    side = W - ML - MR
    p = _Panel(ML, MT, side, side * 0.6, lim, lim)
    body = p.frame(title, f"measured {label}", f"predicted {label}")
    body.append(p.polyline(lim, lim, "#999", dash=True))
    step = max(1, len(m) // MAX_POINTS)
    for a, b in zip(p.X(m[::step]), p.Y(pr[::step])):
        body.append(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="1" fill="{COLORS[0]}"/>')
    return _write(path, _document(W, side * 0.6 + MT + MB, body))


def _write(path, text) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


# ---------------------------------------------------------------- standard plots


def standard_plots(cols: dict, out_dir, plan_lines=None) -> list[Path]:
    out = Path(out_dir)
    t = cols["t"]
    deg = np.degrees
    files = [
        time_panels(out / "pitch.svg", t, [("pitch", "deg", [("theta", deg(cols["theta"]), False),
                                                             ("theta_ref", deg(cols["theta_ref"]), True)])]),
        time_panels(out / "roll.svg", t, [("roll", "deg", [("phi", deg(cols["phi"]), False),
                                                           ("phi_ref", deg(cols["phi_ref"]), True)])]),
        time_panels(out / "inputs.svg", t, [
            ("flaps", "command", [("flap 0", cols["u_c0"], False), ("flap 1", cols["u_c1"], False)]),
            ("motors", "command", [("motor 2", cols["u_c2"], False), ("motor 3", cols["u_c3"], False)]),
        ]),
        time_panels(out / "accel.svg", t, [
            (f"{a} acceleration", "m/s^2", [(f"acc_{a}", cols[f"acc_f_{a}"], False),
                                            (f"ref {a}", cols[f"acc_ref_{a}"], True)])
            for a in "ned"
        ]),
    ]
    step = max(1, int(round(2.0 / max(float(np.median(np.diff(t))) if len(t) > 1 else 1.0, 1e-9))))
    va_n = cols["vel_n"] - cols["wind_n"]
    va_e = cols["vel_e"] - cols["wind_e"]
    files.append(track(out / "track.svg", cols["pos_e"], cols["pos_n"],
                       arrows=(cols["pos_e"][::step], cols["pos_n"][::step], va_e[::step], va_n[::step], 1.0),
                       title="track (top view), arrows: airspeed over 1 s", lines=plan_lines))
    return files
