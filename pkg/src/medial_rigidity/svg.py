"""Deterministic SVG diagrams of branch configurations and planar medial
graphs."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Union

import numpy as np

from .branch import BranchConfig2D
from .errors import IoError
from .graph import MedialGraph


SIZE = 400
_HEADER = (
    '<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" '
    'viewBox="0 0 {s} {s}">\n'
    "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" "
    "markerWidth=\"6\" markerHeight=\"6\" orient=\"auto\">"
    "<polygon points=\"0,0 10,5 0,10\" fill=\"#c0392b\"/></marker></defs>\n"
    '<rect width="{s}" height="{s}" fill="white"/>\n'
)


def _f(x: float) -> str:
    # fixed precision keeps output byte-stable
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def _config_svg(config: BranchConfig2D) -> str:
    c = SIZE / 2.0
    scale = SIZE * 0.4

    def px(v):
        return c + scale * v[0], c - scale * v[1]

    out = [_HEADER.format(s=SIZE)]
    tangents = config.tangents
    radials = [r / np.linalg.norm(r) * 0.6 for r in config.radials]
    for i, t in enumerate(tangents):
        x, y = px(t)
        out.append(f'<line class="tangent" id="tangent{i}" x1="{_f(c)}" y1="{_f(c)}" '
                   f'x2="{_f(x)}" y2="{_f(y)}" stroke="black" stroke-width="2"/>\n')
    for i, r in enumerate(radials):
        x, y = px(r)
        out.append(f'<path class="radial" id="radial{i}" d="M {_f(c)} {_f(c)} L {_f(x)} {_f(y)}" '
                   f'stroke="#c0392b" stroke-width="1.5" fill="none" marker-end="url(#arrow)"/>\n')
    for i, theta in enumerate(config.angles):
        start = math.atan2(tangents[i][1], tangents[i][0])
        rad = 0.18 + 0.04 * (i % 2)
        p0 = px((rad * math.cos(start), rad * math.sin(start)))
        p1 = px((rad * math.cos(start + theta), rad * math.sin(start + theta)))
        large = 1 if theta > math.pi else 0
        # y is flipped, so counterclockwise in the plane is sweep-flag 0
        out.append(f'<path class="angle-arc" d="M {_f(p0[0])} {_f(p0[1])} A {_f(scale * rad)} '
                   f'{_f(scale * rad)} 0 {large} 0 {_f(p1[0])} {_f(p1[1])}" stroke="#2c3e50" '
                   f'fill="none"/>\n')
        mid = start + theta / 2.0
        lx, ly = px(((rad + 0.1) * math.cos(mid), (rad + 0.1) * math.sin(mid)))
        out.append(f'<text x="{_f(lx)}" y="{_f(ly)}" font-size="12" text-anchor="middle">'
                   f"θ{i + 1}={theta:.4f}</text>\n")
    out.append("</svg>\n")
    return "".join(out)


def _graph_svg(graph: MedialGraph) -> str:
    if graph.ambient_dim != 2:
        raise ValueError("only planar graphs can be rendered")
    allpts = [np.asarray(v.position) for v in graph.vertices]
    for c in graph.curves:
        allpts.extend(graph.points(c))
    pts = np.array(allpts)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(np.max(hi - lo), 1e-12))
    scale = SIZE * 0.85 / span
    mid = (lo + hi) / 2.0

    def px(v):
        return SIZE / 2.0 + scale * (v[0] - mid[0]), SIZE / 2.0 - scale * (v[1] - mid[1])

    out = [_HEADER.format(s=SIZE)]
    for c in graph.curves:
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in (px(p) for p in graph.points(c)))
        out.append(f'<polyline class="curve" id="curve-{c.id}" points="{coords}" '
                   f'stroke="black" fill="none"/>\n')
    colours = {"branch": "#c0392b", "edge": "#2980b9", "regular": "#7f8c8d"}
    for v in graph.vertices:
        x, y = px(v.position)
        out.append(f'<circle class="{v.kind}" id="vertex-{v.id}" cx="{_f(x)}" cy="{_f(y)}" '
                   f'r="3" fill="{colours[v.kind]}"/>\n')
    out.append("</svg>\n")
    return "".join(out)


def render_svg(item: Union[BranchConfig2D, MedialGraph]) -> str:
    """SVG text for a branch configuration or a planar medial graph.

    Configurations draw tangent lines as ``<line>`` elements, radial vectors
    as arrow paths, and angle arcs labelled to 4 decimals.
    """
    if isinstance(item, BranchConfig2D):
        return _config_svg(item)
    if isinstance(item, MedialGraph):
        return _graph_svg(item)
    raise TypeError(f"cannot render {type(item).__name__}")


def emit_svg(item: Union[BranchConfig2D, MedialGraph], path) -> Path:
    """Write :func:`render_svg` output to ``path``.

    Raises
    ------
    IoError
        The file cannot be written.
    """
    path = Path(path)
    try:
        path.write_text(render_svg(item), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path
