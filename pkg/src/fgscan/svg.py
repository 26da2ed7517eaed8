"""Minimal SVG line plots of CIF curves; no plotting dependency."""

from __future__ import annotations

import numpy as np

W, H = 640, 420
ML, MR, MT, MB = 60, 20, 20, 50


def _steps(t, y):
    # right-continuous step path through (t[i], y[i])
    xs, ys = [t[0]], [y[0]]
    for i in range(1, len(t)):
        xs += [t[i], t[i]]
        ys += [y[i - 1], y[i]]
    return np.array(xs), np.array(ys)


def _polyline(xs, ys, sx, sy, style):
    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    return f'<polyline fill="none" {style} points="{pts}"/>'


def cif_svg(est, title: str = "Cumulative incidence") -> str:
    """Render the point curve and any interval/band curves as SVG text."""
    t = np.concatenate(([0.0], est.times))
    y = np.concatenate(([0.0], est.values))
    tmax = float(t[-1]) if t[-1] > 0 else 1.0
    ymax = max(float(np.max(y)), float(np.max(est.upper)) if est.upper is not None else 0.0,
               float(np.max(est.band_upper)) if est.band_upper is not None else 0.0)
    ymax = min(1.0, max(ymax * 1.05, 0.05))

    def sx(v):
        return ML + (W - ML - MR) * v / tmax

    def sy(v):
        return H - MB - (H - MT - MB) * v / ymax

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">',
           f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MT - MB}" '
           'fill="white" stroke="black"/>',
           f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="13">time</text>',
           f'<text x="15" y="{H / 2}" font-size="13" transform="rotate(-90 15 {H / 2})" '
           f'text-anchor="middle">{title}</text>']
    for k in range(6):
        v = ymax * k / 5
        out.append(f'<text x="{ML - 6}" y="{sy(v) + 4:.2f}" font-size="11" '
                   f'text-anchor="end">{v:.2f}</text>')
        tv = tmax * k / 5
        out.append(f'<text x="{sx(tv):.2f}" y="{H - MB + 16}" font-size="11" '
                   f'text-anchor="middle">{tv:.2g}</text>')
    xs, ys = _steps(t, y)
    out.append(_polyline(xs, ys, sx, sy, 'stroke="black" stroke-width="1.5"'))
    if est.grid is not None:
        for lo, hi, style in ((est.lower, est.upper, 'stroke="steelblue" stroke-dasharray="5,3"'),
                              (est.band_lower, est.band_upper,
                               'stroke="firebrick" stroke-dasharray="2,2"')):
            if lo is None:
                continue
            for curve in (lo, hi):
                xs, ys = _steps(est.grid, curve)
                out.append(_polyline(xs, ys, sx, sy, style))
    out.append("</svg>")
    return "\n".join(out) + "\n"
