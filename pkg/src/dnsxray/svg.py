"""Minimal SVG rendering for report artifacts.

Charts are drawn directly with polylines, rects and text so outputs
are deterministic byte-for-byte and depend on nothing but the data.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

PALETTE = ("#3b6fb6", "#c84a3b", "#3d8f5f", "#9457a3", "#c78a2d", "#49889e")
BENIGN_COLOR = "#3b6fb6"
MALICIOUS_COLOR = "#c84a3b"
GRID_COLOR = "#d8d8d8"
TEXT_COLOR = "#333333"


def _fmt(value: float) -> str:
    return f"{value:.2f}".rstrip("0").rstrip(".") or "0"


class Canvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self._parts: list[str] = []

    def line(self, x1, y1, x2, y2, stroke=TEXT_COLOR, width=1.0, dash=None):
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self._parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{width}"{dash_attr}/>'
        )

    def polyline(self, points, stroke, width=1.5, ident=None):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        id_attr = f' id="{escape(ident)}"' if ident else ""
        self._parts.append(
            f'<polyline{id_attr} points="{coords}" fill="none" '
            f'stroke="{stroke}" stroke-width="{width}"/>'
        )

    def rect(self, x, y, w, h, fill, opacity=1.0, ident=None):
        id_attr = f' id="{escape(ident)}"' if ident else ""
        opacity_attr = f' fill-opacity="{opacity}"' if opacity != 1.0 else ""
        self._parts.append(
            f'<rect{id_attr} x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
            f'height="{_fmt(h)}" fill="{fill}"{opacity_attr}/>'
        )

    def circle(self, cx, cy, r, fill, opacity=1.0):
        opacity_attr = f' fill-opacity="{opacity}"' if opacity != 1.0 else ""
        self._parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" fill="{fill}"{opacity_attr}/>'
        )

    def text(self, x, y, content, size=11, anchor="start", fill=TEXT_COLOR):
        self._parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" '
            f'font-family="sans-serif" text-anchor="{anchor}" fill="{fill}">'
            f"{escape(str(content))}</text>"
        )

    def to_svg(self) -> str:
        body = "\n".join(self._parts)
        return (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>\n'
            f"{body}\n</svg>\n"
        )


class LinearScale:
    def __init__(self, lo: float, hi: float, out_lo: float, out_hi: float):
        if hi == lo:
            hi = lo + 1.0
        self.lo, self.hi = lo, hi
        self.out_lo, self.out_hi = out_lo, out_hi

    def __call__(self, value: float) -> float:
        frac = (value - self.lo) / (self.hi - self.lo)
        return self.out_lo + frac * (self.out_hi - self.out_lo)

    def ticks(self, count: int = 5):
        return [self.lo + (self.hi - self.lo) * i / (count - 1) for i in range(count)]


def _axes(canvas, sx, sy, x_label, y_label, x0, y0, x1, y1):
    canvas.line(x0, y0, x1, y0)
    canvas.line(x0, y0, x0, y1)
    for tx in sx.ticks():
        px = sx(tx)
        canvas.line(px, y0, px, y0 + 4)
        canvas.text(px, y0 + 16, f"{tx:.2f}".rstrip("0").rstrip("."), size=9, anchor="middle")
    for ty in sy.ticks():
        py = sy(ty)
        canvas.line(x0 - 4, py, x0, py)
        canvas.text(x0 - 6, py + 3, f"{ty:.2f}".rstrip("0").rstrip("."), size=9, anchor="end")
    canvas.text((x0 + x1) / 2, y0 + 32, x_label, size=11, anchor="middle")
    canvas.text(14, (y0 + y1) / 2, y_label, size=11, anchor="middle")


def roc_chart(curves: list[tuple[str, list[tuple[float, float]], float]]) -> str:
    """Overlayed ROC curves; each entry is (label, points, auc)."""
    canvas = Canvas(520, 420)
    x0, y0, x1, y1 = 60, 360, 480, 30
    sx = LinearScale(0.0, 1.0, x0, x1)
    sy = LinearScale(0.0, 1.0, y0, y1)
    _axes(canvas, sx, sy, "false positive rate", "tpr", x0, y0, x1, y1)
    canvas.line(sx(0), sy(0), sx(1), sy(1), stroke=GRID_COLOR, dash="4,4")
    for i, (label, points, auc) in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        canvas.polyline([(sx(x), sy(y)) for x, y in points], color, ident=f"curve-{i}")
        canvas.text(x0 + 12, y1 + 14 + 14 * i, f"{label} (AUC={auc:.4f})", size=10, fill=color)
    return canvas.to_svg()


def summary_chart(entries: list[tuple[str, float]]) -> str:
    """Horizontal mean-|phi| bars, strongest on top."""
    row_h = 18
    height = 50 + row_h * len(entries)
    canvas = Canvas(560, height)
    top = 30
    max_val = max((v for _, v in entries), default=1.0) or 1.0
    scale = LinearScale(0.0, max_val, 0.0, 330.0)
    for i, (name, value) in enumerate(entries):
        y = top + i * row_h
        canvas.text(180, y + 12, name, size=10, anchor="end")
        canvas.rect(190, y + 2, max(scale(value), 0.5), row_h - 6, MALICIOUS_COLOR, ident=f"bar-{i}")
        canvas.text(196 + scale(value), y + 12, f"{value:.4f}", size=9)
    canvas.text(280, 16, "mean |phi|", size=11, anchor="middle")
    return canvas.to_svg()


def pdp_chart(
    feature: str,
    grid: list[float],
    mean_output: list[float],
    expected_feature_value: float,
    expected_output: float,
    background_values: list[float] | None = None,
) -> str:
    canvas = Canvas(520, 420)
    x0, y0, x1, y1 = 60, 360, 480, 30
    lo, hi = min(grid), max(grid)
    out_lo = min(min(mean_output), expected_output)
    out_hi = max(max(mean_output), expected_output)
    pad = (out_hi - out_lo) * 0.1 or 0.05
    sx = LinearScale(lo, hi, x0, x1)
    sy = LinearScale(out_lo - pad, out_hi + pad, y0, y1)
    if background_values:
        bins = 24
        width = (hi - lo) or 1.0
        counts = [0] * bins
        for v in background_values:
            k = min(bins - 1, max(0, int((v - lo) / width * bins)))
            counts[k] += 1
        peak = max(counts) or 1
        for k, count in enumerate(counts):
            if count:
                bx = x0 + (x1 - x0) * k / bins
                bh = 60.0 * count / peak
                canvas.rect(bx, y0 - bh, (x1 - x0) / bins, bh, GRID_COLOR, opacity=0.6)
    _axes(canvas, sx, sy, feature, "mean score", x0, y0, x1, y1)
    canvas.line(sx(expected_feature_value), y0, sx(expected_feature_value), y1, stroke=GRID_COLOR, dash="4,4")
    canvas.line(x0, sy(expected_output), x1, sy(expected_output), stroke=GRID_COLOR, dash="4,4")
    canvas.polyline([(sx(x), sy(y)) for x, y in zip(grid, mean_output)], MALICIOUS_COLOR, ident="pdp")
    return canvas.to_svg()


def force_chart(
    domain: str,
    base_value: float,
    model_output: float,
    malicious_side: list[tuple[str, float]],
    benign_side: list[tuple[str, float]],
    top: int = 10,
) -> str:
    rows = malicious_side[:top] + benign_side[:top]
    row_h = 18
    height = 80 + row_h * max(1, len(rows))
    canvas = Canvas(560, height)
    canvas.text(12, 18, f"{domain}: base {base_value:.4f} -> output {model_output:.4f}", size=11)
    mid = 300.0
    max_val = max((abs(p) for _, p in rows), default=1.0) or 1.0
    scale = 180.0 / max_val
    canvas.line(mid, 36, mid, height - 16, stroke=GRID_COLOR)
    for i, (name, phi) in enumerate(rows):
        y = 44 + i * row_h
        width = abs(phi) * scale
        if phi > 0:
            canvas.rect(mid, y, max(width, 0.5), row_h - 6, MALICIOUS_COLOR, ident=f"push-{i}")
            canvas.text(mid + width + 6, y + 10, f"{name} (+{phi:.4f})", size=9)
        else:
            canvas.rect(mid - width, y, max(width, 0.5), row_h - 6, BENIGN_COLOR, ident=f"push-{i}")
            canvas.text(mid - width - 6, y + 10, f"{name} ({phi:.4f})", size=9, anchor="end")
    return canvas.to_svg()


def pairs_chart(
    fx: str,
    fy: str,
    benign_points: list[tuple[float, float]],
    malicious_points: list[tuple[float, float]],
) -> str:
    """Class-colored scatter with marginal histograms as density proxies."""
    canvas = Canvas(580, 540)
    x0, y0, x1, y1 = 70, 440, 470, 130
    everything = benign_points + malicious_points
    xs = [p[0] for p in everything] or [0.0]
    ys = [p[1] for p in everything] or [0.0]
    sx = LinearScale(min(xs), max(xs), x0, x1)
    sy = LinearScale(min(ys), max(ys), y0, y1)
    _axes(canvas, sx, sy, fx, fy, x0, y0, x1, y1)

    def marginal(points, picker, scale, horizontal, offset, color):
        bins = 30
        counts = [0] * bins
        lo, hi = scale.lo, scale.hi
        width = (hi - lo) or 1.0
        for p in points:
            k = min(bins - 1, max(0, int((picker(p) - lo) / width * bins)))
            counts[k] += 1
        peak = max(counts) or 1
        for k, count in enumerate(counts):
            if not count:
                continue
            frac = count / peak
            if horizontal:
                bx = x0 + (x1 - x0) * k / bins
                canvas.rect(bx, offset + 40 * (1 - frac), (x1 - x0) / bins, 40 * frac, color, opacity=0.55)
            else:
                by = y0 - (y0 - y1) * (k + 1) / bins
                canvas.rect(offset, by, 40 * frac, (y0 - y1) / bins, color, opacity=0.55)

    marginal(benign_points, lambda p: p[0], sx, True, 30, BENIGN_COLOR)
    marginal(malicious_points, lambda p: p[0], sx, True, 76, MALICIOUS_COLOR)
    marginal(benign_points, lambda p: p[1], sy, False, 480, BENIGN_COLOR)
    marginal(malicious_points, lambda p: p[1], sy, False, 526, MALICIOUS_COLOR)
    for x, y in benign_points:
        canvas.circle(sx(x), sy(y), 2.2, BENIGN_COLOR, opacity=0.5)
    for x, y in malicious_points:
        canvas.circle(sx(x), sy(y), 2.2, MALICIOUS_COLOR, opacity=0.5)
    canvas.text(x0, 20, f"{fx} vs {fy}", size=12)
    canvas.circle(x0 + 6, 104, 4, BENIGN_COLOR)
    canvas.text(x0 + 16, 108, "benign", size=10)
    canvas.circle(x0 + 86, 104, 4, MALICIOUS_COLOR)
    canvas.text(x0 + 96, 108, "malicious", size=10)
    return canvas.to_svg()
