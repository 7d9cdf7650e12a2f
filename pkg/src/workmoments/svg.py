"""Minimal SVG 1.1 line and heat-map charts written as plain text."""

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=80, right=150, top=40, bottom=60)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    k = 0
    while start + k * step <= hi + 1e-12 * step:
        ticks.append(start + k * step)
        k += 1
    return ticks


def _fmt(x):
    return f"{x:.6g}"


def _range(values):
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


class _Frame:
    def __init__(self, xlim, ylim):
        self.xlim, self.ylim = xlim, ylim
        self.x0, self.x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        self.y0, self.y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    def x(self, v):
        lo, hi = self.xlim
        return self.x0 + (v - lo) / (hi - lo) * (self.x1 - self.x0)

    def y(self, v):
        lo, hi = self.ylim
        return self.y0 + (v - lo) / (hi - lo) * (self.y1 - self.y0)

    def axes(self, xlabel, ylabel, title):
        out = [
            f'<rect x="{self.x0}" y="{self.y1}" width="{self.x1 - self.x0}" height="{self.y0 - self.y1}" '
            'fill="none" stroke="black"/>'
        ]
        for t in _ticks(*self.xlim):
            px = self.x(t)
            out.append(f'<line x1="{px:.2f}" y1="{self.y0}" x2="{px:.2f}" y2="{self.y0 + 5}" stroke="black"/>')
            out.append(f'<text x="{px:.2f}" y="{self.y0 + 20}" text-anchor="middle">{_fmt(t)}</text>')
        for t in _ticks(*self.ylim):
            py = self.y(t)
            out.append(f'<line x1="{self.x0 - 5}" y1="{py:.2f}" x2="{self.x0}" y2="{py:.2f}" stroke="black"/>')
            out.append(f'<text x="{self.x0 - 8}" y="{py + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
        cx = 0.5 * (self.x0 + self.x1)
        cy = 0.5 * (self.y0 + self.y1)
        out.append(f'<text x="{cx:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
        out.append(
            f'<text x="20" y="{cy:.1f}" text-anchor="middle" transform="rotate(-90 20 {cy:.1f})">{escape(ylabel)}</text>'
        )
        out.append(f'<text x="{cx:.1f}" y="24" text-anchor="middle">{escape(title)}</text>')
        return out


def _document(body):
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def line_chart(series, xlabel, ylabel, title="", markers=()):
    """Render ``{label: (xs, ys)}`` as polylines; labels in ``markers`` get dots only."""
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys]
    frame = _Frame(_range(xs_all), _range(ys_all))
    body = frame.axes(xlabel, ylabel, title)
    for k, (label, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = [(frame.x(x), frame.y(y)) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
        if label in markers:
            body.extend(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{color}"/>' for px, py in pts)
        elif pts:
            d = "M" + " L".join(f"{px:.2f},{py:.2f}" for px, py in pts)
            body.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN["top"] + 18 * k + 10
        lx = WIDTH - MARGIN["right"] + 10
        body.append(f'<rect x="{lx}" y="{ly - 8}" width="12" height="8" fill="{color}"/>')
        body.append(f'<text x="{lx + 18}" y="{ly}">{escape(label)}</text>')
    return _document(body)


def _color(t):
    t = min(max(t, 0.0), 1.0)
    r = int(255 * t)
    b = int(255 * (1 - t))
    g = int(255 * (1 - abs(2 * t - 1)) * 0.8)
    return f"#{r:02x}{g:02x}{b:02x}"


def heat_map(xs, ys, values, xlabel, ylabel, title="", colorbar_label=""):
    """Cells ``values[i][j]`` at ``(xs[j], ys[i])`` on index-uniform axes; NaN is grey."""
    finite = [v for row in values for v in row if math.isfinite(v)]
    vlo, vhi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    span = (vhi - vlo) or 1.0
    frame = _Frame((0.0, float(len(xs))), (0.0, float(len(ys))))
    body = []
    for i, row in enumerate(values):
        for j, v in enumerate(row):
            fill = _color((v - vlo) / span) if math.isfinite(v) else "#cccccc"
            x0, x1 = frame.x(j), frame.x(j + 1)
            y0, y1 = frame.y(i + 1), frame.y(i)
            body.append(
                f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" height="{y1 - y0:.2f}" fill="{fill}"/>'
            )
    body.append(
        f'<rect x="{frame.x0}" y="{frame.y1}" width="{frame.x1 - frame.x0}" height="{frame.y0 - frame.y1}" '
        'fill="none" stroke="black"/>'
    )
    for j in sorted({0, len(xs) // 2, len(xs) - 1}):
        px = frame.x(j + 0.5)
        body.append(f'<text x="{px:.2f}" y="{frame.y0 + 20}" text-anchor="middle">{_fmt(xs[j])}</text>')
    for i in sorted({0, len(ys) // 2, len(ys) - 1}):
        py = frame.y(i + 0.5)
        body.append(f'<text x="{frame.x0 - 8}" y="{py + 4:.2f}" text-anchor="end">{_fmt(ys[i])}</text>')
    cx = 0.5 * (frame.x0 + frame.x1)
    cy = 0.5 * (frame.y0 + frame.y1)
    body.append(f'<text x="{cx:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    body.append(
        f'<text x="20" y="{cy:.1f}" text-anchor="middle" transform="rotate(-90 20 {cy:.1f})">{escape(ylabel)}</text>'
    )
    body.append(f'<text x="{cx:.1f}" y="24" text-anchor="middle">{escape(title)}</text>')
    bx = WIDTH - MARGIN["right"] + 30
    n = 40
    for k in range(n):
        y0 = frame.y0 + (frame.y1 - frame.y0) * (k + 1) / n
        h = (frame.y0 - frame.y1) / n
        body.append(f'<rect x="{bx}" y="{y0:.2f}" width="16" height="{h + 0.3:.2f}" fill="{_color((k + 0.5) / n)}"/>')
    body.append(f'<text x="{bx + 22}" y="{frame.y1 + 4}">{_fmt(vhi)}</text>')
    body.append(f'<text x="{bx + 22}" y="{frame.y0 + 4}">{_fmt(vlo)}</text>')
    body.append(f'<text x="{bx}" y="{frame.y1 - 10}">{escape(colorbar_label)}</text>')
    return _document(body)


def write_svg(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
