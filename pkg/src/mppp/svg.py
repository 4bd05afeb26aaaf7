"""Minimal SVG line charts (no plotting library needed)."""
from __future__ import annotations

import math
import xml.etree.ElementTree as ET

WIDTH, HEIGHT = 800, 500
# plot area inside the viewport: left, top, right, bottom
MARGIN = (70, 30, 30, 50)


def nice_ticks(lo, hi, target=6):
    """Round-number ticks (1, 2, 5 x 10^k) covering ``[lo, hi]``."""
    if not hi > lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9)
    stop = math.floor(hi / step + 1e-9)
    return [round(k * step, 12) for k in range(start, stop + 1)]


def _fmt(v):
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _tick_label(v):
    s = f"{v:.6g}"
    return "0" if s in ("-0", "0") else s


class LineChart:
    """Collects polylines and writes them with auto-scaled linear axes.

    Axes cover the hull of all data plus a 5% margin on each side.
    """

    def __init__(self, xlabel="t", ylabel="", title=""):
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.title = title
        self.series = []

    def add(self, xs, ys, color, label="", dash=None):
        pts = [(float(x), float(y)) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
        self.series.append(dict(points=pts, color=color, label=label, dash=dash))

    def _bounds(self):
        xs = [p[0] for s in self.series for p in s["points"]]
        ys = [p[1] for s in self.series for p in s["points"]]
        if not xs:
            return 0.0, 1.0, 0.0, 1.0
        bounds = []
        for lo, hi in ((min(xs), max(xs)), (min(ys), max(ys))):
            if hi == lo:
                lo, hi = lo - 0.5, hi + 0.5
            pad = 0.05 * (hi - lo)
            bounds += [lo - pad, hi + pad]
        return tuple(bounds)

    def element(self):
        x0, x1, y0, y1 = self._bounds()
        left, top, right, bottom = MARGIN
        pw, ph = WIDTH - left - right, HEIGHT - top - bottom

        def sx(x):
            return left + (x - x0) / (x1 - x0) * pw

        def sy(y):
            return top + ph - (y - y0) / (y1 - y0) * ph

        root = ET.Element(
            "svg",
            xmlns="http://www.w3.org/2000/svg",
            width=str(WIDTH),
            height=str(HEIGHT),
            viewBox=f"0 0 {WIDTH} {HEIGHT}",
        )
        ET.SubElement(root, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
        axes = ET.SubElement(root, "g", stroke="black", fill="none")
        ET.SubElement(axes, "rect", x=_fmt(left), y=_fmt(top), width=_fmt(pw), height=_fmt(ph))

        text = ET.SubElement(root, "g", fill="black", style="font-family:sans-serif;font-size:12px")
        for v in nice_ticks(x0, x1):
            px = sx(v)
            ET.SubElement(axes, "line", x1=_fmt(px), y1=_fmt(top + ph), x2=_fmt(px), y2=_fmt(top + ph + 5))
            t = ET.SubElement(text, "text", x=_fmt(px), y=_fmt(top + ph + 18), style="text-anchor:middle")
            t.text = _tick_label(v)
        for v in nice_ticks(y0, y1):
            py = sy(v)
            ET.SubElement(axes, "line", x1=_fmt(left - 5), y1=_fmt(py), x2=_fmt(left), y2=_fmt(py))
            t = ET.SubElement(text, "text", x=_fmt(left - 8), y=_fmt(py + 4), style="text-anchor:end")
            t.text = _tick_label(v)
        if self.xlabel:
            t = ET.SubElement(text, "text", x=_fmt(left + pw / 2), y=_fmt(HEIGHT - 10), style="text-anchor:middle")
            t.text = self.xlabel
        if self.ylabel:
            t = ET.SubElement(
                text, "text", x="15", y=_fmt(top + ph / 2),
                transform=f"rotate(-90 15 {_fmt(top + ph / 2)})", style="text-anchor:middle",
            )
            t.text = self.ylabel
        if self.title:
            t = ET.SubElement(text, "text", x=_fmt(left + pw / 2), y="20", style="text-anchor:middle")
            t.text = self.title

        for k, s in enumerate(self.series):
            if not s["points"]:
                continue
            attrs = dict(
                points=" ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in s["points"]),
                fill="none",
                stroke=s["color"],
            )
            attrs["stroke-width"] = "1.5"
            if s["dash"]:
                attrs["stroke-dasharray"] = s["dash"]
            line = ET.SubElement(root, "polyline", attrs)
            if s["label"]:
                ET.SubElement(line, "title").text = s["label"]
                lx, ly = left + pw - 150, top + 15 + 16 * k
                ET.SubElement(root, "line", x1=_fmt(lx), y1=_fmt(ly), x2=_fmt(lx + 20), y2=_fmt(ly),
                              stroke=s["color"], **({"stroke-dasharray": s["dash"]} if s["dash"] else {}))
                ET.SubElement(text, "text", x=_fmt(lx + 26), y=_fmt(ly + 4)).text = s["label"]
        return root

    def write(self, path):
        ET.ElementTree(self.element()).write(path, encoding="utf-8", xml_declaration=True)
