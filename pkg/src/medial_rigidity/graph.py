"""Medial graph data model, JSON file format and validation.

A medial graph stores vertices (``regular``, ``branch`` or ``edge``) and
curves. A curve is a polyline whose entries are either vertex ids or inline
points, with a radius and a list of radial vectors per polyline point: two
at smooth points, three or more at branch vertices, one or two at edge
vertices.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .branch import BranchConfig2D
from .errors import InvariantViolation, SchemaError

VERTEX_KINDS = ("regular", "branch", "edge")
RADIUS_REL_TOL = 1e-6
SMOOTH_ANGLE_TOL = 1e-6

VertexId = Union[str, int]


@dataclass(frozen=True)
class Vertex:
    id: VertexId
    position: tuple
    kind: str


@dataclass(frozen=True)
class Curve:
    id: VertexId
    polyline: tuple
    radii: tuple
    radial_vectors: tuple


@dataclass(frozen=True)
class MedialGraph:
    ambient_dim: int
    vertices: tuple
    curves: tuple
    smooth_angle_tol: float = SMOOTH_ANGLE_TOL

    def vertex(self, vertex_id) -> Vertex:
        for v in self.vertices:
            if v.id == vertex_id:
                return v
        raise KeyError(vertex_id)

    def curve(self, curve_id) -> Curve:
        for c in self.curves:
            if c.id == curve_id:
                return c
        raise KeyError(curve_id)

    def points(self, curve: Curve) -> np.ndarray:
        """Polyline of ``curve`` as an array with vertex ids resolved."""
        pos = {v.id: v.position for v in self.vertices}
        return np.array([pos[p] if not isinstance(p, tuple) else p for p in curve.polyline],
                        dtype=float)

    def incident_curves(self, vertex_id) -> list:
        """``(curve, at_start)`` for every curve ending at ``vertex_id``."""
        out = []
        for c in self.curves:
            if c.polyline[0] == vertex_id:
                out.append((c, True))
            if c.polyline[-1] == vertex_id and len(c.polyline) > 1:
                out.append((c, False))
        return out

    def branch_vertices(self) -> list:
        return [v.id for v in self.vertices if v.kind == "branch"]


def _is_point(entry) -> bool:
    return isinstance(entry, (list, tuple))


def _vector(value, dim: int, where: str) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != dim:
        raise SchemaError(f"{where}: expected a {dim}-vector")
    try:
        out = tuple(float(x) for x in value)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: non-numeric coordinate") from exc
    if not all(math.isfinite(x) for x in out):
        raise SchemaError(f"{where}: non-finite coordinate")
    return out


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise SchemaError(f"{where}: missing field {key!r}")
    return doc[key]


def parse_medial_graph(document, smooth_angle_tol=None, validate: bool = True) -> MedialGraph:
    """Build a validated :class:`MedialGraph` from a JSON string or dict.

    Parameters
    ----------
    document : str or dict
        JSON text or the decoded object with ``ambient_dim``, ``vertices``
        and ``curves``. An optional ``smooth_angle_tol`` field overrides the
        default equal-angle tolerance.
    smooth_angle_tol : float, optional
        Tolerance for the equal-angle check at smooth points; takes
        precedence over the document field.

    Raises
    ------
    SchemaError
        Malformed document.
    InvariantViolation
        A geometric invariant fails; ``location`` names the vertex or curve
        point.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise SchemaError("top level must be an object")
    dim = _require(document, "ambient_dim", "graph")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 2:
        raise SchemaError("ambient_dim must be an integer >= 2")
    raw_vertices = _require(document, "vertices", "graph")
    raw_curves = _require(document, "curves", "graph")
    if not isinstance(raw_vertices, list) or not isinstance(raw_curves, list):
        raise SchemaError("vertices and curves must be lists")

    vertices = []
    seen = set()
    for i, rv in enumerate(raw_vertices):
        where = f"vertices[{i}]"
        if not isinstance(rv, dict):
            raise SchemaError(f"{where}: expected an object")
        vid = _require(rv, "id", where)
        if not isinstance(vid, (str, int)) or isinstance(vid, bool):
            raise SchemaError(f"{where}: id must be a string or integer")
        if vid in seen:
            raise SchemaError(f"{where}: duplicate vertex id {vid!r}")
        seen.add(vid)
        kind = _require(rv, "kind", where)
        if kind not in VERTEX_KINDS:
            raise SchemaError(f"{where}: kind must be one of {VERTEX_KINDS}")
        vertices.append(Vertex(vid, _vector(_require(rv, "position", where), dim, where), kind))

    curves = []
    seen_curves = set()
    for i, rc in enumerate(raw_curves):
        where = f"curves[{i}]"
        if not isinstance(rc, dict):
            raise SchemaError(f"{where}: expected an object")
        cid = _require(rc, "id", where)
        if cid in seen_curves:
            raise SchemaError(f"{where}: duplicate curve id {cid!r}")
        seen_curves.add(cid)
        poly_raw = _require(rc, "polyline", where)
        if not isinstance(poly_raw, list) or len(poly_raw) < 2:
            raise SchemaError(f"curve {cid!r}: polyline needs at least 2 entries")
        poly = []
        for j, entry in enumerate(poly_raw):
            if _is_point(entry):
                poly.append(_vector(entry, dim, f"curve {cid!r} point {j}"))
            elif entry in seen:
                poly.append(entry)
            else:
                raise SchemaError(f"curve {cid!r} point {j}: unknown vertex {entry!r}")
        radii_raw = _require(rc, "radii", where)
        vecs_raw = _require(rc, "radial_vectors", where)
        if not isinstance(radii_raw, list) or len(radii_raw) != len(poly):
            raise SchemaError(f"curve {cid!r}: need one radius per polyline point")
        if not isinstance(vecs_raw, list) or len(vecs_raw) != len(poly):
            raise SchemaError(f"curve {cid!r}: need one radial-vector list per polyline point")
        try:
            radii = tuple(float(r) for r in radii_raw)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"curve {cid!r}: non-numeric radius") from exc
        vecs = []
        for j, group in enumerate(vecs_raw):
            if not isinstance(group, list) or not group:
                raise SchemaError(f"curve {cid!r} point {j}: radial vectors must be a non-empty list")
            vecs.append(tuple(_vector(v, dim, f"curve {cid!r} point {j}") for v in group))
        curves.append(Curve(cid, tuple(poly), radii, tuple(vecs)))

    tol = smooth_angle_tol
    if tol is None:
        tol = float(document.get("smooth_angle_tol", SMOOTH_ANGLE_TOL))
    graph = MedialGraph(dim, tuple(vertices), tuple(curves), tol)
    if validate:
        validate_medial_graph(graph)
    return graph


def _point_label(curve: Curve, j: int) -> str:
    entry = curve.polyline[j]
    if _is_point(entry):
        return f"curve {curve.id!r} point {j}"
    return f"curve {curve.id!r} point {j} (vertex {entry!r})"


def validate_medial_graph(graph: MedialGraph) -> None:
    """Raise :class:`InvariantViolation` on the first failing invariant."""
    kinds = {v.id: v.kind for v in graph.vertices}
    for curve in graph.curves:
        pts = graph.points(curve)
        for j, (r, group) in enumerate(zip(curve.radii, curve.radial_vectors)):
            loc = _point_label(curve, j)
            if not (r > 0.0 and math.isfinite(r)):
                raise InvariantViolation(f"radius {r!r} is not positive", loc)
            for v in group:
                length = float(np.linalg.norm(v))
                if abs(length - r) > RADIUS_REL_TOL * r:
                    raise InvariantViolation(
                        f"radial vector length {length!r} differs from radius {r!r}", loc)
            entry = curve.polyline[j]
            kind = "regular" if _is_point(entry) else kinds[entry]
            count = len(group)
            if kind == "branch" and count < 3:
                raise InvariantViolation(f"branch point has {count} radial vectors", loc)
            if kind == "regular" and count != 2:
                raise InvariantViolation(f"smooth point has {count} radial vectors", loc)
            if kind == "edge" and count > 2:
                raise InvariantViolation(f"edge point has {count} radial vectors", loc)
            if kind == "regular" and 0 < j < len(pts) - 1:
                tangent = pts[j + 1] - pts[j - 1]
                norm = np.linalg.norm(tangent)
                if norm == 0.0:
                    raise InvariantViolation("repeated polyline point", loc)
                tangent = tangent / norm
                a = np.asarray(group[0]) / np.linalg.norm(group[0])
                b = np.asarray(group[1]) / np.linalg.norm(group[1])
                # equal angles with the tangent; the difference is then normal to it
                gap = abs(math.asin(max(-1.0, min(1.0, float(a @ tangent))))
                          - math.asin(max(-1.0, min(1.0, float(b @ tangent)))))
                if gap > graph.smooth_angle_tol:
                    raise InvariantViolation(
                        f"radial vectors make unequal angles with the tangent (gap {gap:.3g})", loc)
    for v in graph.vertices:
        degree = len(graph.incident_curves(v.id))
        if v.kind == "branch" and degree < 3:
            raise InvariantViolation(f"branch vertex has {degree} incident curves", f"vertex {v.id!r}")


def graph_to_document(graph: MedialGraph) -> dict:
    doc = {
        "ambient_dim": graph.ambient_dim,
        "vertices": [
            {"id": v.id, "position": list(v.position), "kind": v.kind} for v in graph.vertices
        ],
        "curves": [
            {
                "id": c.id,
                "polyline": [list(p) if _is_point(p) else p for p in c.polyline],
                "radii": list(c.radii),
                "radial_vectors": [[list(v) for v in group] for group in c.radial_vectors],
            }
            for c in graph.curves
        ],
    }
    if graph.smooth_angle_tol != SMOOTH_ANGLE_TOL:
        doc["smooth_angle_tol"] = graph.smooth_angle_tol
    return doc


def serialize(graph: MedialGraph) -> str:
    """JSON text; floats use the shortest repr that round-trips exactly."""
    return json.dumps(graph_to_document(graph), indent=1) + "\n"


def load_graph(path, **kwargs) -> MedialGraph:
    return parse_medial_graph(Path(path).read_text(encoding="utf-8"), **kwargs)


def save_graph(graph: MedialGraph, path) -> None:
    Path(path).write_text(serialize(graph), encoding="utf-8")


# ---------------------------------------------------------------------------
# Synthetic fixtures
# ---------------------------------------------------------------------------

def _straight_curve(cid, start_id, end_id, start, direction, length, samples, radius,
                    start_vectors, end_vectors) -> tuple:
    """Straight curve with constant radius and opposite normal radial vectors."""
    direction = np.asarray(direction, float) / np.linalg.norm(direction)
    normal = np.array([-direction[1], direction[0]])
    poly = [start_id]
    for s in np.linspace(0.0, length, samples)[1:-1]:
        poly.append(tuple(float(c) for c in np.asarray(start) + s * direction))
    poly.append(end_id)
    smooth = (tuple(radius * normal), tuple(-radius * normal))
    vecs = [start_vectors] + [smooth] * (samples - 2) + [end_vectors]
    return Curve(cid, tuple(poly), (float(radius),) * samples, tuple(vecs))


def synthetic_branch_graph(config: BranchConfig2D, center: Sequence[float] = (0.0, 0.0),
                           length: float = 1.0, samples: int = 8,
                           radius: float = 0.25) -> MedialGraph:
    """Star-shaped graph: one branch vertex with straight curves along the
    tangent directions of ``config``; radial vectors at the branch vertex are
    the configuration's, rescaled to ``radius``."""
    c = np.asarray(center, dtype=float)
    tangents = config.tangents
    branch_vecs = tuple(tuple(float(x) for x in radius * r / np.linalg.norm(r))
                        for r in config.radials)
    vertices = [Vertex("b0", tuple(float(x) for x in c), "branch")]
    curves = []
    for i, t in enumerate(tangents):
        end = c + length * np.asarray(t)
        vertices.append(Vertex(f"e{i}", tuple(float(x) for x in end), "edge"))
        normal = np.array([-t[1], t[0]])
        end_vecs = (tuple(radius * normal), tuple(-radius * normal))
        curves.append(_straight_curve(f"c{i}", "b0", f"e{i}", c, t, length, samples, radius,
                                      branch_vecs, end_vecs))
    return MedialGraph(2, tuple(vertices), tuple(curves))


def rectangle_medial_graph(width: float = 4.0, height: float = 2.0, samples: int = 6,
                           end_fraction: float = 0.95) -> MedialGraph:
    """Analytic medial graph of an axis-aligned rectangle centred at the
    origin (width > height). Corner bisectors stop at ``end_fraction`` of
    the way to the corner so every radius stays positive."""
    h = height / 2.0
    xb = width / 2.0 - h
    vertices = [
        Vertex("b_left", (-xb, 0.0), "branch"),
        Vertex("b_right", (xb, 0.0), "branch"),
    ]
    s_end = end_fraction * h
    corners = {
        "e_ur": (1.0, 1.0), "e_lr": (1.0, -1.0), "e_ul": (-1.0, 1.0), "e_ll": (-1.0, -1.0),
    }
    for name, (sx, sy) in corners.items():
        vertices.append(Vertex(name, (sx * (xb + s_end), sy * s_end), "edge"))

    def vecs_at(x, y) -> tuple:
        # feet on the sides nearest to (x, y)
        r = h - abs(y) if abs(x) <= xb else min(h - abs(y), width / 2.0 - abs(x))
        out = []
        if abs(x) >= xb:
            out.append((math.copysign(r, x), 0.0))
        out += [(0.0, r), (0.0, -r)] if abs(y) == 0.0 else [(0.0, math.copysign(r, y))]
        return r, tuple(out)

    curves = []
    axis = ["b_left"] + [(float(x), 0.0) for x in np.linspace(-xb, xb, samples)[1:-1]] + ["b_right"]
    axis_vecs = [vecs_at(-xb, 0.0)[1]] + [((0.0, h), (0.0, -h))] * (samples - 2) + [vecs_at(xb, 0.0)[1]]
    curves.append(Curve("axis", tuple(axis), (h,) * samples, tuple(axis_vecs)))
    for name, (sx, sy) in corners.items():
        start = "b_right" if sx > 0 else "b_left"
        poly, radii, vecs = [start], [h], [vecs_at(sx * xb, 0.0)[1]]
        for s in np.linspace(0.0, s_end, samples)[1:]:
            x, y = sx * (xb + s), sy * s
            r = h - s
            poly.append((float(x), float(y)))
            radii.append(float(r))
            vecs.append(((sx * r, 0.0), (0.0, sy * r)))
        poly[-1] = name
        curves.append(Curve(f"c_{name[2:]}", tuple(poly), tuple(radii), tuple(vecs)))
    return MedialGraph(2, tuple(vertices), tuple(curves))
