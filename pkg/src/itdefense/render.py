"""Static SVG rendering of an engagement."""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .engine import EngagementResult
from .scenario import ScenarioConfig

COLORS = ("#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22")
IT_COLOR = "#d62728"
MARGIN_PX = 20.0


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def render_svg(result: EngagementResult, cfg: ScenarioConfig, scale: float | None = None,
               size_px: float = 800.0) -> str:
    """SVG with agent paths, zones, defense discs (1 sigma) and event markers.

    ``scale`` is pixels per meter; by default the scene is fitted into
    ``size_px``.  World y points up.
    """
    agents = result.agents
    paths = {a: np.array([(s.x, s.y) for s in result.agent_samples(a)]) for a in agents}
    hva = np.asarray(cfg.hva, dtype=float)
    f = cfg.fields

    pts = [p for p in paths.values() if len(p)] + [hva[None, :]]
    lo = np.min(np.vstack(pts), axis=0) - cfg.engagement.r_dz
    hi = np.max(np.vstack(pts), axis=0) + cfg.engagement.r_dz
    for ei in cfg.eis:
        c = np.asarray(ei.patrol_center)
        lo = np.minimum(lo, c - f.r_pac)
        hi = np.maximum(hi, c + f.r_pac)
    for d in cfg.static_defenses:
        c = np.asarray(d)
        lo = np.minimum(lo, c - abs(f.sigma_sd))
        hi = np.maximum(hi, c + abs(f.sigma_sd))
    extent = hi - lo
    if scale is None:
        scale = (size_px - 2 * MARGIN_PX) / max(float(np.max(extent)), 1e-9)
    width = float(extent[0]) * scale + 2 * MARGIN_PX
    height = float(extent[1]) * scale + 2 * MARGIN_PX

    def X(x: float) -> float:
        return MARGIN_PX + (x - lo[0]) * scale

    def Y(y: float) -> float:
        return MARGIN_PX + (hi[1] - y) * scale

    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "width": _fmt(width), "height": _fmt(height),
        "viewBox": f"0 0 {_fmt(width)} {_fmt(height)}",
        "data-scale": repr(scale),
    })
    ET.SubElement(svg, "rect", {"width": "100%", "height": "100%", "fill": "white"})

    def circle(cx, cy, r, cls, **style):
        attrs = {"class": cls, "cx": _fmt(X(cx)), "cy": _fmt(Y(cy)), "r": _fmt(r * scale)}
        attrs.update(style)
        return ET.SubElement(svg, "circle", attrs)

    for d in cfg.static_defenses:
        circle(d[0], d[1], abs(f.sigma_sd), "defense", fill="#ff7f0e", **{"fill-opacity": "0.25"})
    for ei in cfg.eis:
        c = ei.patrol_center
        circle(c[0], c[1], f.r_pac, "patrol", fill="none", stroke="#7f7f7f", **{"stroke-dasharray": "4 3"})
    circle(hva[0], hva[1], cfg.engagement.r_dz, "dz", fill="none", stroke="black")
    circle(hva[0], hva[1], max(2.0 / scale, 1e-9), "hva", fill="black")

    for k, a in enumerate(agents):
        p = paths[a]
        color = IT_COLOR if a == "it" else COLORS[(k - 1) % len(COLORS)]
        d = "M " + " L ".join(f"{_fmt(X(x))} {_fmt(Y(y))}" for x, y in p)
        ET.SubElement(svg, "path", {"class": "agent", "data-agent": a, "d": d, "fill": "none",
                                    "stroke": color, "stroke-width": "1.5"})
        if a != "it" and len(p):
            circle(p[-1, 0], p[-1, 1], cfg.engagement.r_iz, "iz", fill="none", stroke=color)

    for ev in result.events:
        ET.SubElement(svg, "circle", {"class": f"event {ev.kind}", "cx": _fmt(X(ev.x)), "cy": _fmt(Y(ev.y)),
                                      "r": "3", "fill": "black"})
    ET.indent(svg)
    return ET.tostring(svg, encoding="unicode") + "\n"
