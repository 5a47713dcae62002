"""
Static SVG line charts of a sweep metric against k: per mode, the median across replicates with a
shaded interquartile band and a marker on the peak median.
"""

import xml.etree.ElementTree as ET

import numpy as np
from pydantic import BaseModel, ConfigDict

from .errors import InsufficientDataError, ParameterError
from .nk_model import Mode
from .sweep import METRICS, SweepRecord

SVG_NAMESPACE = "http://www.w3.org/2000/svg"

WIDTH = 640
HEIGHT = 400
MARGIN = 56

MODE_COLORS = {Mode.ADJACENT: "#1f77b4", Mode.RANDOM: "#d62728"}

METRIC_TITLES = {"nc": "number of communities", "q": "modularity", "msc": "mean squared correlation"}


class SeriesPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    low: float
    median: float
    high: float


def metric_series(records: list[SweepRecord], metric: str) -> dict[Mode, list[SeriesPoint]]:
    "per mode, (k, 25th percentile, median, 75th percentile) in increasing k"
    grouped: dict[Mode, dict[int, list[float]]] = {}

    for record in records:
        grouped.setdefault(record.mode, {}).setdefault(record.k, []).append(float(getattr(record, metric)))

    series = {}

    for mode, by_k in grouped.items():
        points = []

        for k in sorted(by_k):
            low, median, high = np.percentile(by_k[k], [25, 50, 75])
            points.append(SeriesPoint(k=k, low=float(low), median=float(median), high=float(high)))

        series[mode] = points

    return series


def peak(points: list[SeriesPoint]) -> SeriesPoint:
    "the point with the largest median; the smallest k wins ties"
    return max(points, key=lambda point: (point.median, -point.k))


def render_svg(records: list[SweepRecord], metric: str = "nc") -> str:
    if metric not in METRICS:
        raise ParameterError(f"metric must be one of {', '.join(METRICS)}")

    if not records:
        raise InsufficientDataError("no records")

    series = metric_series(records, metric)

    ks = [point.k for points in series.values() for point in points]
    lows = [point.low for points in series.values() for point in points]
    highs = [point.high for points in series.values() for point in points]

    k_min, k_max = min(ks), max(ks)
    y_min, y_max = min(0.0, min(lows)), max(highs)

    if y_max == y_min:
        y_max = y_min + 1.0

    def x(k: float) -> float:
        span = k_max - k_min or 1
        return round(MARGIN + (k - k_min) / span * (WIDTH - 2 * MARGIN), 2)

    def y(value: float) -> float:
        return round(HEIGHT - MARGIN - (value - y_min) / (y_max - y_min) * (HEIGHT - 2 * MARGIN), 2)

    svg = ET.Element(
        "svg",
        {
            "xmlns": SVG_NAMESPACE,
            "width": str(WIDTH),
            "height": str(HEIGHT),
            "viewBox": f"0 0 {WIDTH} {HEIGHT}",
            "font-family": "sans-serif",
            "font-size": "12",
        },
    )
    ET.SubElement(svg, "title").text = f"{METRIC_TITLES[metric]} by k"

    axes = ET.SubElement(svg, "g", {"class": "axes", "stroke": "#333"})
    origin = {"x1": str(MARGIN), "y1": str(y(y_min))}
    ET.SubElement(axes, "line", origin | {"x2": str(WIDTH - MARGIN), "y2": str(y(y_min))})
    ET.SubElement(axes, "line", origin | {"x2": str(MARGIN), "y2": str(y(y_max))})

    for k in range(k_min, k_max + 1):
        label = ET.SubElement(svg, "text", {"x": str(x(k)), "y": str(HEIGHT - MARGIN + 18), "text-anchor": "middle"})
        label.text = str(k)

    for value in (y_min, (y_min + y_max) / 2, y_max):
        label = ET.SubElement(svg, "text", {"x": str(MARGIN - 8), "y": str(y(value)), "text-anchor": "end"})
        label.text = f"{value:.3g}"

    ET.SubElement(svg, "text", {"x": str(WIDTH / 2), "y": str(HEIGHT - 12), "text-anchor": "middle"}).text = "k"
    ET.SubElement(svg, "text", {"x": str(MARGIN), "y": "20"}).text = METRIC_TITLES[metric]

    for position, (mode, points) in enumerate(series.items()):
        color = MODE_COLORS.get(mode, "#555")
        group = ET.SubElement(svg, "g", {"class": "series", "data-mode": mode.value})

        band = [f"{x(p.k)},{y(p.high)}" for p in points] + [f"{x(p.k)},{y(p.low)}" for p in reversed(points)]
        ET.SubElement(
            group,
            "polygon",
            {"class": "iqr", "points": " ".join(band), "fill": color, "fill-opacity": "0.2", "stroke": "none"},
        )

        ET.SubElement(
            group,
            "polyline",
            {
                "class": "median",
                "points": " ".join(f"{x(p.k)},{y(p.median)}" for p in points),
                "fill": "none",
                "stroke": color,
                "stroke-width": "2",
            },
        )

        top = peak(points)
        ET.SubElement(
            group,
            "circle",
            {
                "class": "peak",
                "data-k": str(top.k),
                "cx": str(x(top.k)),
                "cy": str(y(top.median)),
                "r": "4",
                "fill": color,
            },
        )

        legend = ET.SubElement(
            group,
            "text",
            {"x": str(WIDTH - MARGIN), "y": str(20 + 16 * position), "text-anchor": "end", "fill": color},
        )
        legend.text = mode.value

    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(svg, encoding="unicode") + "\n"
