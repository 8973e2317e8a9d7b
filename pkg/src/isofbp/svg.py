"""Minimal static SVG writer for log-scale convergence plots."""
import math
from xml.sax.saxutils import escape

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _finite_positive(values):
    return [v for v in values if v is not None and math.isfinite(v) and v > 0]


def log_plot(series, path, title="", xlabel="iteration", ylabel="error",
             width=640, height=420):
    """Write polylines of ``series`` on a log10 y axis.

    Parameters
    ----------
    series : dict
        Label -> ``(xs, ys)``. Nonpositive or non-finite ``y`` values are dropped.
    path : str or path-like
        Output file.
    """
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = _finite_positive([y for _, ys in series.values() for y in ys])
    x0, x1 = (min(xs_all), max(xs_all)) if xs_all else (0, 1)
    if x1 == x0:
        x1 = x0 + 1
    if ys_all:
        e0 = math.floor(math.log10(min(ys_all)))
        e1 = math.ceil(math.log10(max(ys_all)))
    else:
        e0, e1 = -1, 0
    if e1 == e0:
        e1 = e0 + 1

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (e1 - math.log10(y)) / (e1 - e0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}">',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    step = max(1, (e1 - e0) // 8)
    for e in range(e0, e1 + 1, step):
        y = sy(10.0 ** e)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" font-size="11" text-anchor="end">1e{e}</text>')
    for x in range(int(math.ceil(x0)), int(x1) + 1, max(1, int(x1 - x0) // 10)):
        out.append(f'<text x="{sx(x):.2f}" y="{top + ph + 16}" font-size="11" text-anchor="middle">{x}</text>')
    for k, (label, (xs, ys)) in enumerate(series.items()):
        color = _COLORS[k % len(_COLORS)]
        pts = [(sx(x), sy(y)) for x, y in zip(xs, ys) if y is not None and math.isfinite(y) and y > 0]
        if pts:
            coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = top + 14 + 16 * k
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly}" font-size="11">{escape(label)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{top - 14}" font-size="13" text-anchor="middle">{escape(title)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
