"""Minimal static SVG charts with the plotted values embedded as data attributes."""
from __future__ import annotations

from xml.sax.saxutils import escape


def line_chart(xs, ys, baseline=None, title="", xlabel="k", ylabel="AUC", width=520, height=360) -> str:
    """Polyline of ``ys`` against ``xs`` with an optional dashed horizontal baseline."""
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    ml, mr, mt, mb = 56, 20, 34, 44
    iw, ih = width - ml - mr, height - mt - mb
    vals = ys + ([float(baseline)] if baseline is not None else [])
    lo_y = min(vals) if vals else 0.0
    hi_y = max(vals) if vals else 1.0
    if hi_y - lo_y < 1e-9:
        lo_y, hi_y = lo_y - 0.05, hi_y + 0.05
    pad = 0.05 * (hi_y - lo_y)
    lo_y, hi_y = lo_y - pad, hi_y + pad
    lo_x = min(xs) if xs else 0.0
    hi_x = max(xs) if xs else 1.0
    if hi_x == lo_x:
        lo_x, hi_x = lo_x - 1, hi_x + 1

    def px(x, y):
        return ml + (x - lo_x) / (hi_x - lo_x) * iw, mt + (hi_y - y) / (hi_y - lo_y) * ih

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml}" y="22" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<rect x="{ml}" y="{mt}" width="{iw}" height="{ih}" fill="none" stroke="#999"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        yv = lo_y + frac * (hi_y - lo_y)
        _, yp = px(lo_x, yv)
        out.append(f'<text x="{ml - 6}" y="{yp + 4:.2f}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="10">{yv:.3f}</text>')
        xv = lo_x + frac * (hi_x - lo_x)
        xp, _ = px(xv, lo_y)
        out.append(f'<text x="{xp:.2f}" y="{mt + ih + 16}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="10">{xv:g}</text>')
    out.append(f'<text x="{ml + iw / 2:.1f}" y="{height - 8}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{mt + ih / 2:.1f}" transform="rotate(-90 14 {mt + ih / 2:.1f})" '
               f'text-anchor="middle" font-family="sans-serif" font-size="12">{escape(ylabel)}</text>')
    if baseline is not None:
        x0, yb = px(lo_x, float(baseline))
        x1, _ = px(hi_x, float(baseline))
        out.append(f'<line x1="{x0:.2f}" y1="{yb:.2f}" x2="{x1:.2f}" y2="{yb:.2f}" stroke="#d62728" '
                   f'stroke-dasharray="5,4" data-value="{float(baseline)!r}"/>')
    if xs:
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in (px(x, y) for x, y in zip(xs, ys)))
        out.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            a, b = px(x, y)
            out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2" fill="#1f77b4" data-k="{x:g}" data-value="{y!r}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
