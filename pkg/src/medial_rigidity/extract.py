"""Approximate 2D medial axes from sampled boundaries, and branch
configurations estimated from discrete medial graphs."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import networkx as nx
import numpy as np
import shapely
from scipy.spatial import Voronoi, cKDTree
from shapely.geometry import LinearRing, Polygon

from .branch import BranchConfig2D
from .errors import (
    InsufficientPolylinePoints,
    InvalidConfig,
    NotABranch,
    NotSimple,
    SchemaError,
    TooFewPoints,
)
from .graph import Curve, MedialGraph, Vertex

MIN_BOUNDARY_POINTS = 16
TANGENT_WINDOW = 5


@dataclass(frozen=True, eq=False)
class BoundarySample:
    """Closed, counterclockwise, simple polygon sample (closure implicit)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise SchemaError("boundary points must be an (N, 2) array")
        if len(pts) > 1 and np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        if len(pts) < MIN_BOUNDARY_POINTS:
            raise TooFewPoints(f"need at least {MIN_BOUNDARY_POINTS} points, got {len(pts)}")
        ring = LinearRing(pts)
        if not ring.is_simple or not Polygon(ring).is_valid:
            raise NotSimple("boundary polyline self-intersects")
        if not ring.is_ccw:
            pts = pts[::-1].copy()
        object.__setattr__(self, "points", pts)

    @property
    def polygon(self) -> Polygon:
        return Polygon(self.points)

    @classmethod
    def from_json(cls, document) -> "BoundarySample":
        if isinstance(document, (str, bytes)):
            document = json.loads(document)
        if not isinstance(document, dict) or "points" not in document:
            raise SchemaError('boundary file needs a "points" list')
        return cls(np.asarray(document["points"], dtype=float))

    @classmethod
    def load(cls, path) -> "BoundarySample":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def rectangle_boundary(width: float, height: float, n: int) -> BoundarySample:
    """``n`` points equally spaced by arc length around a centred rectangle,
    starting at the lower-left corner."""
    w, h = width / 2.0, height / 2.0
    corners = np.array([[-w, -h], [w, -h], [w, h], [-w, h], [-w, -h]])
    seg = np.linalg.norm(np.diff(corners, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = np.arange(n) * cum[-1] / n
    idx = np.searchsorted(cum, s, side="right") - 1
    frac = (s - cum[idx]) / seg[idx]
    pts = corners[idx] + frac[:, None] * (corners[idx + 1] - corners[idx])
    return BoundarySample(pts)


def ellipse_boundary(a: float, b: float, n: int) -> BoundarySample:
    t = 2.0 * np.pi * np.arange(n) / n
    return BoundarySample(np.column_stack([a * np.cos(t), b * np.sin(t)]))


def _fit_direction(points: np.ndarray, origin: np.ndarray) -> np.ndarray:
    """Total-least-squares line direction, oriented away from ``origin``."""
    centered = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centered)
    d = vt[0]
    if d @ (points.mean(axis=0) - origin) < 0:
        d = -d
    return d / np.linalg.norm(d)


def curve_tangent_at(points: np.ndarray, k: int = TANGENT_WINDOW) -> np.ndarray:
    """Limiting unit tangent at ``points[0]`` from the first ``k`` points
    (including ``points[0]``), pointing into the curve."""
    if len(points) < 2:
        raise InsufficientPolylinePoints("a tangent needs at least 2 polyline points")
    window = points[: max(2, min(k, len(points)))]
    return _fit_direction(window, points[0])


def _angle(v) -> float:
    return math.atan2(v[1], v[0]) % (2.0 * math.pi)


def _in_ccw_arc(angle: float, start: float, end: float) -> bool:
    span = (end - start) % (2.0 * math.pi)
    return 0.0 < (angle - start) % (2.0 * math.pi) < span


def branch_config_from_graph(graph: MedialGraph, vertex_id, k: int = TANGENT_WINDOW) -> BranchConfig2D:
    """Branch configuration at a branch vertex of a planar medial graph.

    Tangents are total-least-squares fits over the ``k`` polyline points
    nearest the vertex on each incident curve; radial vectors are the ones
    stored at the vertex, matched to the sectors they lie in.

    Raises
    ------
    NotABranch
        The vertex is not a branch vertex with 3 or 4 incident curves, or
        the graph is not planar.
    InsufficientPolylinePoints
        An incident curve has fewer than 2 points.
    """
    if graph.ambient_dim != 2:
        raise NotABranch("branch configurations are estimated for planar graphs only")
    try:
        vertex = graph.vertex(vertex_id)
    except KeyError:
        raise NotABranch(f"no vertex {vertex_id!r}") from None
    incident = graph.incident_curves(vertex_id)
    if vertex.kind != "branch" or len(incident) not in (3, 4):
        raise NotABranch(f"vertex {vertex_id!r} is not a branch vertex with 3 or 4 curves")
    tangents = []
    radial_sets = []
    for curve, at_start in incident:
        pts = graph.points(curve)
        if len(pts) < 2:
            raise InsufficientPolylinePoints(f"curve {curve.id!r} is too short")
        if not at_start:
            pts = pts[::-1]
        tangents.append(curve_tangent_at(pts, k))
        radial_sets.append(curve.radial_vectors[0 if at_start else -1])
    tangents = sorted(tangents, key=_angle)
    stored = max(radial_sets, key=len)
    angles = [_angle(t) for t in tangents]
    n = len(tangents)
    radials = []
    for i in range(n):
        start, end = angles[i], angles[(i + 1) % n]
        inside = [np.asarray(v) for v in stored if _in_ccw_arc(_angle(v), start, end)]
        if len(inside) != 1:
            raise NotABranch(
                f"vertex {vertex_id!r}: sector {i} holds {len(inside)} stored radial vectors")
        radials.append(inside[0])
    return BranchConfig2D(np.array(tangents), np.array(radials))


# ---------------------------------------------------------------------------
# Voronoi extraction
# ---------------------------------------------------------------------------

def _voronoi_skeleton(boundary: BoundarySample, prune_ratio: float):
    pts = boundary.points
    vor = Voronoi(pts)
    inside = shapely.contains_xy(boundary.polygon, vor.vertices[:, 0], vor.vertices[:, 1])
    tree = cKDTree(pts)
    radius, _ = tree.query(vor.vertices)
    g = nx.Graph()
    sites: dict = {}
    for (p, q), (a, b) in zip(vor.ridge_points, vor.ridge_vertices):
        for v in (a, b):
            if v >= 0:
                sites.setdefault(v, set()).update((int(p), int(q)))
        if a < 0 or b < 0 or not (inside[a] and inside[b]):
            continue
        separation = np.linalg.norm(pts[p] - pts[q])
        local_r = max(radius[a], radius[b])
        if separation < prune_ratio * local_r or separation < 1e-12:
            continue
        g.add_edge(int(a), int(b))
    return vor, radius, sites, g


def _merge_close(g: nx.Graph, coords: np.ndarray, sites: dict, tol: float) -> nx.Graph:
    """Identify vertices closer than ``tol`` (coincident Voronoi vertices)."""
    nodes = list(g.nodes)
    if not nodes:
        return g
    tree = cKDTree(coords[nodes])
    groups = nx.Graph()
    groups.add_nodes_from(nodes)
    for i, j in tree.query_pairs(tol):
        groups.add_edge(nodes[i], nodes[j])
    mapping = {}
    for comp in nx.connected_components(groups):
        rep = min(comp)
        for c in comp:
            mapping[c] = rep
            if c != rep:
                sites[rep] = sites.get(rep, set()) | sites.get(c, set())
    h = nx.Graph()
    h.add_nodes_from(set(mapping.values()))
    for a, b in g.edges:
        if mapping[a] != mapping[b]:
            h.add_edge(mapping[a], mapping[b])
    return h


def _chains(g: nx.Graph) -> list:
    """Maximal paths whose interior nodes have degree 2."""
    ends = {n for n in g.nodes if g.degree(n) != 2}
    seen_edges = set()
    chains = []
    for s in sorted(ends):
        for nb in sorted(g.neighbors(s)):
            if frozenset((s, nb)) in seen_edges:
                continue
            path = [s, nb]
            seen_edges.add(frozenset((s, nb)))
            while path[-1] not in ends:
                nxt = [m for m in g.neighbors(path[-1]) if m != path[-2]]
                if not nxt:
                    break
                seen_edges.add(frozenset((path[-1], nxt[0])))
                path.append(nxt[0])
                if path[-1] == s:
                    break
            chains.append(path)
    # pure cycles have no endpoints
    for comp in nx.connected_components(g):
        if all(g.degree(n) == 2 for n in comp):
            cyc = [e[0] for e in nx.find_cycle(g.subgraph(comp))]
            chains.append(cyc + [cyc[0]])
    return chains


def _chain_length(chain, coords) -> float:
    return float(np.sum(np.linalg.norm(np.diff(coords[chain], axis=0), axis=1)))


def _prune_spikes(g: nx.Graph, coords, radius, spike_ratio: float) -> nx.Graph:
    """Repeatedly drop leaf chains shorter than ``spike_ratio`` times the
    radius at their junction."""
    g = g.copy()
    changed = True
    while changed:
        changed = False
        for chain in _chains(g):
            a, b = chain[0], chain[-1]
            da, db = g.degree(a), g.degree(b)
            if not ((da == 1 and db >= 3) or (db == 1 and da >= 3)):
                continue
            junction = a if da >= 3 else b
            if _chain_length(chain, coords) < spike_ratio * radius[junction]:
                g.remove_nodes_from([n for n in chain if n != junction])
                changed = True
                break
    return g


def _contract_junctions(g: nx.Graph, coords, radius, ratio: float) -> nx.Graph:
    """Collapse short chains joining two junctions into one vertex."""
    g = g.copy()
    changed = True
    while changed:
        changed = False
        for chain in _chains(g):
            a, b = chain[0], chain[-1]
            if a == b or g.degree(a) < 3 or g.degree(b) < 3:
                continue
            if _chain_length(chain, coords) < ratio * max(radius[a], radius[b]):
                keep = min(a, b)
                coords[keep] = coords[chain].mean(axis=0)
                for n in chain:
                    if n == keep:
                        continue
                    for m in list(g.neighbors(n)):
                        if m not in chain:
                            g.add_edge(keep, m)
                    g.remove_node(n)
                changed = True
                break
    return g


def _foot_on_boundary(x, site: int, pts) -> np.ndarray:
    """Nearest point to ``x`` on the two boundary segments meeting at sample
    ``site``."""
    n = len(pts)
    best, best_d = pts[site], float(np.linalg.norm(pts[site] - x))
    for other in (pts[(site - 1) % n], pts[(site + 1) % n]):
        seg = other - pts[site]
        t = min(1.0, max(0.0, float((x - pts[site]) @ seg / (seg @ seg))))
        foot = pts[site] + t * seg
        d = float(np.linalg.norm(foot - x))
        if d < best_d:
            best, best_d = foot, d
    return best


def _smooth_vectors(x, site_ids, pts, r) -> tuple:
    """Two radial vectors of length ``r`` toward the most separated feet."""
    dirs = []
    for s in sorted(site_ids):
        d = _foot_on_boundary(x, s, pts) - x
        dirs.append(d / np.linalg.norm(d))
    best, pair = -2.0, (dirs[0], dirs[-1])
    for i in range(len(dirs)):
        for j in range(i + 1, len(dirs)):
            sep = -float(dirs[i] @ dirs[j])
            if sep > best:
                best, pair = sep, (dirs[i], dirs[j])
    return tuple(tuple(float(c) for c in r * d) for d in pair)


def _sector_vectors(x, tangents, pts, r) -> tuple:
    """Per-sector radial vectors of length ``r`` toward the nearest boundary
    foot point inside each sector."""
    feet = np.array([_foot_on_boundary(x, s, pts) for s in range(len(pts))])
    rel = feet - x
    dist = np.linalg.norm(rel, axis=1)
    ang = np.arctan2(rel[:, 1], rel[:, 0]) % (2.0 * math.pi)
    tang = sorted(_angle(t) for t in tangents)
    out = []
    for i in range(len(tang)):
        start, end = tang[i], tang[(i + 1) % len(tang)]
        span = (end - start) % (2.0 * math.pi)
        mask = ((ang - start) % (2.0 * math.pi) > 0) & ((ang - start) % (2.0 * math.pi) < span)
        if not mask.any():
            raise InvalidConfig("a branch sector sees no boundary sample")
        s = np.flatnonzero(mask)[np.argmin(dist[mask])]
        out.append(tuple(float(c) for c in r * rel[s] / dist[s]))
    return tuple(out)


def _point_skeleton(boundary, vor, radius, smooth_angle_tol) -> MedialGraph:
    """Everything was pruned: keep the centre of the largest inscribed disk."""
    inside = shapely.contains_xy(boundary.polygon, vor.vertices[:, 0], vor.vertices[:, 1])
    if not inside.any():
        raise InvalidConfig("no Voronoi vertex lies inside the boundary")
    best = np.flatnonzero(inside)[np.argmax(radius[inside])]
    v = Vertex("v0", tuple(float(c) for c in vor.vertices[best]), "regular")
    return MedialGraph(2, (v,), (), smooth_angle_tol)


def extract_medial_2d(boundary: BoundarySample, prune_ratio: float = 0.5,
                      spike_ratio: float = 0.5, contract_ratio: float = 0.25,
                      smooth_angle_tol: float = 0.25, k: int = TANGENT_WINDOW) -> MedialGraph:
    """Voronoi approximation of the Blum medial axis of a sampled polygon.

    Parameters
    ----------
    boundary : BoundarySample
    prune_ratio : float
        Ridges whose generating samples are closer than ``prune_ratio``
        times the local radius are discarded. Must lie in [0, 1).
    spike_ratio : float
        Leaf chains shorter than this multiple of the junction radius are
        removed after ridge pruning.
    contract_ratio : float
        Junction-to-junction chains shorter than this multiple of the local
        radius are collapsed into a single branch vertex.
    smooth_angle_tol : float
        Equal-angle tolerance recorded on the graph for later validation.
    k : int
        Tangent window used to split the branch sectors.

    Returns
    -------
    MedialGraph
        Largest connected component of the pruned skeleton. Degree >= 3
        vertices are ``branch``, degree 1 vertices ``edge``.
    """
    if not 0.0 <= prune_ratio < 1.0:
        raise ValueError("prune_ratio must lie in [0, 1)")
    pts = boundary.points
    vor, radius, sites, g = _voronoi_skeleton(boundary, prune_ratio)
    coords = vor.vertices.copy()
    diameter = float(np.max(np.ptp(pts, axis=0)))
    g = _merge_close(g, coords, sites, 1e-7 * diameter)
    if g.number_of_edges() == 0:
        return _point_skeleton(boundary, vor, radius, smooth_angle_tol)
    g = g.subgraph(max(nx.connected_components(g), key=len)).copy()
    g = _prune_spikes(g, coords, radius, spike_ratio)
    g = _contract_junctions(g, coords, radius, contract_ratio)
    g = _prune_spikes(g, coords, radius, spike_ratio)

    tree = cKDTree(pts)
    radius = radius.copy()
    for n in g.nodes:
        radius[n] = tree.query(coords[n])[0]
    chains = _chains(g)
    ends = sorted({c[0] for c in chains} | {c[-1] for c in chains})
    vid = {n: f"v{i}" for i, n in enumerate(ends)}
    kinds = {n: ("branch" if g.degree(n) >= 3 else "edge" if g.degree(n) == 1 else "regular")
             for n in ends}

    vectors = {}
    for n in ends:
        x = coords[n]
        if kinds[n] == "branch":
            tangents = []
            for c in chains:
                for path in (c, c[::-1]):
                    if path[0] == n and path[-1] != n:
                        tangents.append(curve_tangent_at(coords[path], k))
            vectors[n] = _sector_vectors(x, tangents, pts, radius[n])
        else:
            near = sites.get(n, set()) | set(tree.query(x, k=2)[1].tolist())
            vectors[n] = _smooth_vectors(x, near, pts, radius[n])
            if kinds[n] == "edge":
                vectors[n] = vectors[n][:1]

    vertices = tuple(Vertex(vid[n], tuple(float(c) for c in coords[n]), kinds[n]) for n in ends)
    curves = []
    for i, chain in enumerate(sorted(chains, key=lambda c: (vid[c[0]], vid[c[-1]], len(c)))):
        poly, radii, vecs = [], [], []
        for j, n in enumerate(chain):
            if j in (0, len(chain) - 1):
                poly.append(vid[n])
                vecs.append(vectors[n])
            else:
                x = coords[n]
                poly.append(tuple(float(c) for c in x))
                near = sites.get(n, set()) | set(tree.query(x, k=2)[1].tolist())
                vecs.append(_smooth_vectors(x, near, pts, radius[n]))
            radii.append(float(radius[n]))
        curves.append(Curve(f"c{i}", tuple(poly), tuple(radii), tuple(vecs)))
    return MedialGraph(2, vertices, tuple(curves), smooth_angle_tol)
