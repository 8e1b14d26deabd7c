"""Deterministic SVG rendering of a path, its halfspaces, the shells and f-contours."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import contourpy
import numpy as np

from .errors import ConfigError, EmptyRegionError
from .geometry2d import ConvexPolygon
from .pathkit import SearchPath, ultimate_region

WIDTH = 800.0
CONTOUR_RES = 256


@dataclass
class SceneSpec:
    viewbox: tuple  # (xmin, ymin, xmax, ymax) in data coordinates
    points: list = field(default_factory=list)
    halfspace_lines: list = field(default_factory=list)  # [(p, q)] segments
    region: list | None = None  # polygon vertices
    shells: list = field(default_factory=list)  # [(vertices, level)]
    contours: list = field(default_factory=list)  # [(level, [polyline, ...])]

    def __post_init__(self):
        xmin, ymin, xmax, ymax = map(float, self.viewbox)
        if not (xmax > xmin and ymax > ymin):
            raise ConfigError("viewbox must have positive width and height")
        self.viewbox = (xmin, ymin, xmax, ymax)

    def to_dict(self) -> dict:
        return {
            "viewbox": list(self.viewbox),
            "points": [list(map(float, p)) for p in self.points],
            "halfspace_lines": [[list(map(float, p)), list(map(float, q))] for p, q in self.halfspace_lines],
            "region": self.region,
            "shells": [{"vertices": v, "level": lv} for v, lv in self.shells],
            "contours": [{"level": lv, "lines": ls} for lv, ls in self.contours],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        return cls(tuple(data["viewbox"]), list(data.get("points", [])),
                   [tuple(seg) for seg in data.get("halfspace_lines", [])], data.get("region"),
                   [(s["vertices"], s["level"]) for s in data.get("shells", [])],
                   [(c["level"], c["lines"]) for c in data.get("contours", [])])


def _fmt(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


class _Frame:
    def __init__(self, viewbox):
        self.xmin, self.ymin, self.xmax, self.ymax = viewbox
        self.s = WIDTH / (self.xmax - self.xmin)
        self.height = (self.ymax - self.ymin) * self.s

    def xy(self, p) -> str:
        x = (p[0] - self.xmin) * self.s
        y = (self.ymax - p[1]) * self.s
        return f"{_fmt(x)},{_fmt(y)}"

    def poly(self, pts, closed) -> str:
        body = " L ".join(self.xy(p) for p in pts)
        return f"M {body}" + (" Z" if closed else "")


def _clip_line(p, d, viewbox):
    """Segment of the line p + t·d inside the viewbox, or None."""
    xmin, ymin, xmax, ymax = viewbox
    lo, hi = -np.inf, np.inf
    for k, (a, b) in enumerate(((xmin, xmax), (ymin, ymax))):
        if abs(d[k]) < 1e-300:
            if not a <= p[k] <= b:
                return None
            continue
        t1, t2 = (a - p[k]) / d[k], (b - p[k]) / d[k]
        lo, hi = max(lo, min(t1, t2)), min(hi, max(t1, t2))
    if not hi > lo:
        return None
    return p + lo * d, p + hi * d


def scene_viewbox(path: SearchPath, model=None, pad: float = 0.1) -> tuple:
    pts = [path.points]
    if model is not None:
        pts.append(model.shells[-1].polygon.vertices)
        pts.append(model.anchor[None, :])
    P = np.vstack(pts)
    lo, hi = P.min(axis=0), P.max(axis=0)
    span = max(float((hi - lo).max()), 1e-3)
    lo, hi = lo - pad * span, hi + pad * span
    # square viewbox keeps angles honest
    c, h = 0.5 * (lo + hi), 0.5 * float((hi - lo).max())
    return (c[0] - h, c[1] - h, c[0] + h, c[1] + h)


def build_scene(path: SearchPath, f=None, model=None, viewbox=None) -> SceneSpec:
    viewbox = scene_viewbox(path, model) if viewbox is None else viewbox
    xmin, ymin, xmax, ymax = viewbox
    scene = SceneSpec(viewbox, points=path.points.tolist())
    for i in range(len(path)):
        if path.is_degenerate(i):
            continue
        g = path.subgradients[i]
        seg = _clip_line(path.points[i], np.array([-g[1], g[0]]), viewbox)
        if seg is not None:
            scene.halfspace_lines.append((seg[0].tolist(), seg[1].tolist()))
    center = np.array([0.5 * (xmin + xmax), 0.5 * (ymin + ymax)])
    half = np.array([0.5 * (xmax - xmin), 0.5 * (ymax - ymin)])
    try:
        region = ultimate_region(path, (center, half)).polygon
        if isinstance(region, ConvexPolygon):
            scene.region = region.vertices.tolist()
    except EmptyRegionError:
        pass
    if model is not None:
        scene.shells = [(b.polygon.vertices.tolist(), float(b.level)) for b in model.shells]
    if f is not None:
        xs = np.linspace(xmin, xmax, CONTOUR_RES)
        ys = np.linspace(ymin, ymax, CONTOUR_RES)
        GX, GY = np.meshgrid(xs, ys)
        Z = f.values(np.column_stack([GX.ravel(), GY.ravel()])).reshape(GX.shape)
        gen = contourpy.contour_generator(xs, ys, Z, line_type="Separate")
        for level in sorted(set(float(v) for v in path.f_values)):
            lines = [ln.tolist() for ln in gen.lines(level) if len(ln) > 1]
            if lines:
                scene.contours.append((level, lines))
    return scene


def render_svg_text(scene: SceneSpec) -> str:
    fr = _Frame(scene.viewbox)
    W, H = _fmt(WIDTH), _fmt(fr.height)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0.000000" y="0.000000" width="{W}" height="{H}" fill="white" stroke="black"/>',
        '<g id="axes" stroke="#999999" stroke-width="1">',
    ]
    if fr.ymin <= 0.0 <= fr.ymax:
        out.append(f'<path d="{fr.poly([(fr.xmin, 0.0), (fr.xmax, 0.0)], False)}"/>')
    if fr.xmin <= 0.0 <= fr.xmax:
        out.append(f'<path d="{fr.poly([(0.0, fr.ymin), (0.0, fr.ymax)], False)}"/>')
    out.append("</g>")
    if scene.region is not None:
        out.append(f'<path id="region" d="{fr.poly(scene.region, True)}" fill="#dde8ff" stroke="none"/>')
    out.append('<g id="contours" fill="none" stroke="#88aa88" stroke-width="1">')
    for level, lines in scene.contours:
        for ln in lines:
            out.append(f'<path d="{fr.poly(ln, False)}" data-level="{_fmt(level)}"/>')
    out.append("</g>")
    out.append('<g id="halfspaces" stroke="#cc8844" stroke-width="1" stroke-dasharray="4 3">')
    for p, q in scene.halfspace_lines:
        out.append(f'<path d="{fr.poly([p, q], False)}"/>')
    out.append("</g>")
    out.append('<g id="shells" fill="none" stroke="#3355aa" stroke-width="1.5">')
    for k, (verts, level) in enumerate(scene.shells):
        out.append(f'<path id="shell-{k}" d="{fr.poly(verts, True)}" data-level="{level!r}"/>')
        top = max(verts, key=lambda v: (v[1], -v[0]))
        out.append(f'<text x="{fr.xy(top).split(",")[0]}" y="{fr.xy(top).split(",")[1]}" '
                   f'font-size="11" fill="#3355aa">c{k}={level:.6g}</text>')
    out.append("</g>")
    out.append('<g id="path" fill="#aa2222" stroke="#aa2222">')
    if len(scene.points) > 1:
        out.append(f'<path d="{fr.poly(scene.points, False)}" fill="none"/>')
    for p in scene.points:
        x, y = fr.xy(p).split(",")
        out.append(f'<circle cx="{x}" cy="{y}" r="3.000000"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(scene: SceneSpec, out) -> None:
    out = Path(out)
    try:
        out.write_text(render_svg_text(scene), encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {out}: {exc}") from exc
