"""Rigidity invariants at branch strata.

* the cross-ratio orbit of four sheets meeting along a stratum, which any
  diffeomorphism carrying sheets to sheets must preserve;
* the triple of cross ratios formed at a generic three-sheet branch by the
  sheet tangents together with each radial line;
* comparison of two configurations, linear distortion at a branch point,
  and a finite-difference rank certificate for the triple map.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .branch import AngleTriple, BranchConfig2D, StratumPointData, _as_triple
from .errors import DegenerateTriple, ExcludedLocus, InvalidConfig, PinnedDegenerate
from .projective import (
    INF,
    CrossRatioOrbit,
    HyperplanePencil,
    LinePencil2D,
    ProjectiveScalar,
    cross_ratio,
    hyperplane_cross_ratio,
    line_cross_ratio,
    orbit,
    orbit_distance,
)

SLOPE_TOL = 1e-10
EXCLUDED_TOL = 1e-9
DEFAULT_STEP = 1e-5
RANK_REL = 1e-6
RANK_ABS = 1e-8

# Output row r of a triple uses the radial vector of sector ROW_SECTORS[r]
# (1-based); this reproduces the published table row by row.
ROW_SECTORS = (2, 3, 1)


# ---------------------------------------------------------------------------
# Four sheets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourSheetInvariant:
    cross_ratio: float
    orbit: CrossRatioOrbit


def chi_four_sheet(pencil: HyperplanePencil) -> FourSheetInvariant:
    lam = hyperplane_cross_ratio(pencil)
    return FourSheetInvariant(lam, orbit(lam))


def four_subset_invariants(ambient_dim: int, axis, normals) -> dict:
    """Cross-ratio orbits of every 4-subset of k >= 4 sheets sharing ``axis``.

    Keys are index 4-tuples in increasing order.
    """
    normals = np.asarray(normals, dtype=float)
    if len(normals) < 4:
        raise InvalidConfig("need at least four sheets")
    out = {}
    for idx in itertools.combinations(range(len(normals)), 4):
        out[idx] = chi_four_sheet(HyperplanePencil(ambient_dim, axis, normals[list(idx)]))
    return out


@dataclass(frozen=True)
class FourSheetComparison:
    obstructed: bool
    distance: float
    orbit_a: CrossRatioOrbit
    orbit_b: CrossRatioOrbit

    @property
    def message(self) -> str:
        if self.obstructed:
            return "cross-ratio orbits differ: no diffeomorphism can map sheets to sheets"
        return "no obstruction from cross ratio"


def compare_four_sheet(pencil_a: HyperplanePencil, pencil_b: HyperplanePencil,
                       tol: float = 1e-9) -> FourSheetComparison:
    a = chi_four_sheet(pencil_a).orbit
    b = chi_four_sheet(pencil_b).orbit
    d = orbit_distance(a, b)
    return FourSheetComparison(d >= tol, d, a, b)


# ---------------------------------------------------------------------------
# Three sheets with radial lines
# ---------------------------------------------------------------------------

def _tan_scalar(angle: float) -> ProjectiveScalar:
    if abs(angle - math.pi / 2.0) < 1e-15:
        return INF
    return ProjectiveScalar(math.tan(angle))


def _neg(z: ProjectiveScalar) -> ProjectiveScalar:
    return z if z.is_inf else ProjectiveScalar(-z.value)


def radial_pencil_slopes(theta, j: int) -> tuple:
    """Slopes of the lines (L_j, L_j+1, L_j+2, radial line of sector j) after
    rotating L_j onto the x-axis (mirror-image convention).

    ``j = 1`` gives ``(0, -tan t1, tan t3, tan t2)``; ``j = 2`` and ``j = 3``
    are its cyclic variants. A right angle contributes the point at infinity.

    Raises
    ------
    DegenerateTriple
        If two of the four slopes coincide within 1e-10.
    """
    t = _as_triple(theta).theta
    if j not in (1, 2, 3):
        raise ValueError("sector index must be 1, 2 or 3")
    a, b, c = t[j - 1], t[j % 3], t[(j + 1) % 3]
    slopes = (ProjectiveScalar(0.0), _neg(_tan_scalar(a)), _tan_scalar(c), _tan_scalar(b))
    for (i, p), (k, q) in itertools.combinations(enumerate(slopes), 2):
        if p.is_inf and q.is_inf:
            raise DegenerateTriple(f"sector {j}: slopes {i + 1} and {k + 1} are both infinite")
        if not p.is_inf and not q.is_inf and abs(p.value - q.value) < SLOPE_TOL:
            raise DegenerateTriple(f"sector {j}: slopes {i + 1} and {k + 1} coincide")
    return slopes


@dataclass(frozen=True)
class TripleCrossRatio:
    """Ordered cross ratios of the three radial pencils and their orbits.

    ``lambdas[r]`` belongs to sector ``ROW_SECTORS[r]``; ``by_sector`` gives
    the same values indexed by sector 1..3.
    """

    lambdas: tuple
    orbits: tuple

    @property
    def by_sector(self) -> tuple:
        out = [None] * 3
        for r, s in enumerate(ROW_SECTORS):
            out[s - 1] = self.lambdas[r]
        return tuple(out)

    @property
    def orbits_by_sector(self) -> tuple:
        out = [None] * 3
        for r, s in enumerate(ROW_SECTORS):
            out[s - 1] = self.orbits[r]
        return tuple(out)


def triple_cross_ratio(theta) -> TripleCrossRatio:
    theta = _as_triple(theta)
    lambdas = tuple(cross_ratio(*radial_pencil_slopes(theta, s)) for s in ROW_SECTORS)
    return TripleCrossRatio(lambdas, tuple(orbit(lam) for lam in lambdas))


def _rows_from_sectors(values: Sequence[float]) -> tuple:
    return tuple(values[s - 1] for s in ROW_SECTORS)


def triple_from_config(config: BranchConfig2D) -> TripleCrossRatio:
    """Triple cross ratio measured directly from a planar configuration.

    For sector j the four lines are the branch lines j, j+1, j+2 and the
    line through the radial vector of sector j. No equal-angle assumption is
    made, so this applies to skeletal structures as well.
    """
    if config.k != 3:
        raise InvalidConfig("triple cross ratio needs a three-sheet configuration")
    per_sector = []
    for j in range(3):
        lines = [config.tangents[(j + m) % 3] for m in range(3)] + [config.radials[j]]
        per_sector.append(line_cross_ratio(LinePencil2D(np.array(lines))))
    lambdas = _rows_from_sectors(per_sector)
    return TripleCrossRatio(lambdas, tuple(orbit(lam) for lam in lambdas))


def radial_hyperplane_pencil(data: StratumPointData, j: int) -> HyperplanePencil:
    """Pencil of the sheet tangent hyperplanes j, j+1, j+2 and the hyperplane
    spanned by the stratum tangent and the radial vector of sector j (1-based,
    sectors as ordered by the reduction to the transverse plane)."""
    from .branch import reduce_to_transverse_plane

    cfg = reduce_to_transverse_plane(data)
    if cfg.k != 3:
        raise InvalidConfig("need three sheets")
    plane = data.transverse_basis()
    dirs = [cfg.tangents[(j - 1 + m) % 3] for m in range(3)] + [cfg.radials[j - 1]]
    normals = np.array([np.array([-d[1], d[0]]) @ plane for d in dirs])
    return HyperplanePencil(data.ambient_dim, data.stratum_tangent, normals)


def triple_from_stratum(data: StratumPointData) -> TripleCrossRatio:
    per_sector = [hyperplane_cross_ratio(radial_hyperplane_pencil(data, j)) for j in (1, 2, 3)]
    lambdas = _rows_from_sectors(per_sector)
    return TripleCrossRatio(lambdas, tuple(orbit(lam) for lam in lambdas))


def slope_triple_map(b) -> tuple:
    """Cross ratios of the three slope tuples built from ``(b1, b2, b3)``,
    in sector order: ``R(0,-b1,b3,b2), R(0,-b2,b1,b3), R(0,-b3,b2,b1)``."""
    b1, b2, b3 = (float(x) for x in b)
    return (
        cross_ratio(0.0, -b1, b3, b2),
        cross_ratio(0.0, -b2, b1, b3),
        cross_ratio(0.0, -b3, b2, b1),
    )


def _row_lambdas(t1: float, t2: float, t3: float) -> np.ndarray:
    # unchecked fast path for finite differences
    c = slope_triple_map((math.tan(t1), math.tan(t2), math.tan(t3)))
    return np.array(_rows_from_sectors(c))


# ---------------------------------------------------------------------------
# Comparisons
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class YBranchComparison:
    matched: bool
    obstruction: float
    relabeling: tuple
    distances: tuple
    triple_a: TripleCrossRatio
    triple_b: TripleCrossRatio


def compare_y_branch(theta_a, theta_b, tol: float = 1e-9,
                     reflections: bool = False) -> YBranchComparison:
    """Look for a sheet relabeling under which all three radial orbits agree.

    ``relabeling[s]`` is the sector of configuration B matched with sector
    ``s`` of A (0-based). Only the three cyclic relabelings are tried unless
    ``reflections`` is set, in which case all six are. ``obstruction`` is
    the smallest, over relabelings, of the largest orbit distance; a value
    at or above ``tol`` rules out a diffeomorphism that carries sheets to
    sheets and preserves radial lines.
    """
    ta = triple_cross_ratio(theta_a)
    tb = triple_cross_ratio(theta_b)
    oa, ob = ta.orbits_by_sector, tb.orbits_by_sector
    if reflections:
        perms = list(itertools.permutations(range(3)))
    else:
        perms = [tuple((s + k) % 3 for s in range(3)) for k in range(3)]
    best = None
    for p in perms:
        dist = tuple(orbit_distance(oa[s], ob[p[s]]) for s in range(3))
        if best is None or max(dist) < max(best[1]):
            best = (p, dist)
    p, dist = best
    worst = max(dist)
    return YBranchComparison(worst < tol, worst, p, dist, ta, tb)


# ---------------------------------------------------------------------------
# Linear distortion at a branch point
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistortionReport:
    """Where a linear map fixed by pinned branches sends the other branches.

    ``angle_errors`` are angles in [0, pi] between each image direction and
    the intended target direction; ``line_errors`` the same between the
    lines they span, in [0, pi/2].
    """

    matched_curves: int
    indices: tuple
    image_tangents: np.ndarray
    angle_errors: tuple
    line_errors: tuple
    matrix: np.ndarray


def _directions(x) -> np.ndarray:
    if isinstance(x, BranchConfig2D):
        return np.array(x.tangents)
    d = np.asarray(x, dtype=float)
    if d.ndim != 2 or d.shape[1] != 2:
        raise ValueError("expected an array of planar directions")
    return d / np.linalg.norm(d, axis=1)[:, None]


def _angle_between(u, v) -> float:
    c = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(max(-1.0, min(1.0, c)))


def linear_distortion_analysis(source, target, pinned: Sequence[int]) -> DistortionReport:
    """Build the linear map fixed by the pinned branches and measure how far
    it sends the remaining source branches from their targets.

    With two pinned indices the map sends each pinned source direction to its
    target direction with unit scales. With three pinned indices the three
    source lines are sent to the three target lines (the projective case);
    the remaining line then lands on its target exactly when the cross ratios
    agree.
    """
    src = _directions(source)
    tgt = _directions(target)
    if src.shape != tgt.shape:
        raise ValueError("source and target need the same number of branches")
    pinned = tuple(int(i) for i in pinned)
    if len(pinned) == 2:
        i, j = pinned
        s = np.column_stack([src[i], src[j]])
        t = np.column_stack([tgt[i], tgt[j]])
        if abs(np.linalg.det(s)) < 1e-12 or abs(np.linalg.det(t)) < 1e-12:
            raise PinnedDegenerate("pinned branches are parallel")
        a = t @ np.linalg.inv(s)
    elif len(pinned) == 3:
        i, j, k = pinned
        s = np.column_stack([src[i], src[j]])
        t = np.column_stack([tgt[i], tgt[j]])
        if abs(np.linalg.det(s)) < 1e-12 or abs(np.linalg.det(t)) < 1e-12:
            raise PinnedDegenerate("pinned lines are parallel")
        p, q = np.linalg.solve(s, src[k])
        pp, qq = np.linalg.solve(t, tgt[k])
        if min(abs(p), abs(q), abs(pp), abs(qq)) < 1e-12:
            raise PinnedDegenerate("third pinned line is parallel to another")
        a = np.column_stack([(pp / p) * tgt[i], (qq / q) * tgt[j]]) @ np.linalg.inv(s)
    else:
        raise ValueError("pin two or three branches")
    rest = tuple(m for m in range(len(src)) if m not in pinned)
    images = src[list(rest)] @ a.T if rest else np.zeros((0, 2))
    ang = tuple(_angle_between(img, tgt[m]) for img, m in zip(images, rest))
    lines = tuple(min(x, math.pi - x) for x in ang)
    return DistortionReport(len(pinned), rest, images, ang, lines, a)


def example_distortion_configs(alpha: float) -> tuple:
    """Source and target branch directions of the cross-to-arrow example.

    Source: the coordinate cross (+x, +y, -x, -y). Target: +x, the ray at
    ``alpha``, -x, and the ray at ``-alpha`` in the fourth quadrant.
    """
    source = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    target = np.array([
        [1.0, 0.0],
        [math.cos(alpha), math.sin(alpha)],
        [-1.0, 0.0],
        [math.cos(alpha), -math.sin(alpha)],
    ])
    return source, target


# ---------------------------------------------------------------------------
# Rank certificate and local uniqueness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RankCertificate:
    theta: AngleTriple
    jacobian: np.ndarray
    singular_values: tuple
    rank2: bool
    step: float


def _check_excluded(theta: AngleTriple):
    t = theta.theta
    for i, x in enumerate(t):
        if abs(x - math.pi / 2.0) < EXCLUDED_TOL:
            raise ExcludedLocus(f"theta{i + 1} is a right angle")
    for i, j in itertools.combinations(range(3), 2):
        if abs(t[i] - t[j]) < EXCLUDED_TOL:
            raise ExcludedLocus(f"theta{i + 1} equals theta{j + 1}")


def log_triple(p) -> np.ndarray:
    """``(ln|l1|, ln|l2|, ln|l3|)`` on the chart ``(t1, t2) -> (t1, t2, 2pi - t1 - t2)``."""
    t1, t2 = float(p[0]), float(p[1])
    return np.log(np.abs(_row_lambdas(t1, t2, 2.0 * math.pi - t1 - t2)))


def finite_difference_jacobian(f, p, step: float, stencil: int = 3) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    cols = []
    for e in np.eye(len(p)):
        if stencil == 3:
            cols.append((f(p + step * e) - f(p - step * e)) / (2.0 * step))
        elif stencil == 5:
            cols.append((-f(p + 2 * step * e) + 8 * f(p + step * e)
                         - 8 * f(p - step * e) + f(p - 2 * step * e)) / (12.0 * step))
        else:
            raise ValueError("stencil must be 3 or 5")
    return np.column_stack(cols)


def triple_map_jacobian(theta, step: float = DEFAULT_STEP, stencil: int = 3) -> RankCertificate:
    """Finite-difference Jacobian of the log triple map on the allowable
    surface and whether it has rank 2 (sigma2 > 1e-6 sigma1 and > 1e-8)."""
    theta = _as_triple(theta)
    _check_excluded(theta)
    for s in (1, 2, 3):
        radial_pencil_slopes(theta, s)
    jac = finite_difference_jacobian(log_triple, theta.theta[:2], step, stencil)
    sv = np.linalg.svd(jac, compute_uv=False)
    rank2 = bool(sv[1] > RANK_REL * sv[0] and sv[1] > RANK_ABS)
    return RankCertificate(theta, jac, (float(sv[0]), float(sv[1])), rank2, step)


_PLANE = np.array([[1.0, -1.0, 0.0], [1.0, 1.0, -2.0]]) / np.array([[math.sqrt(2.0)], [math.sqrt(6.0)]])


def _is_usable(t) -> bool:
    if not all(0.0 < x < math.pi for x in t):
        return False
    try:
        for s in (1, 2, 3):
            radial_pencil_slopes(AngleTriple.from_approximate(t, 1e-9), s)
    except Exception:
        return False
    return True


@dataclass(frozen=True)
class ProbeResult:
    injective: bool
    min_separation: float
    samples_used: int
    min_value_distance: float


def local_uniqueness_probe(theta, radius: float, samples: int, seed: int = 0) -> ProbeResult:
    """Sample allowable neighbours within ``radius`` of ``theta`` and check
    that none reproduces its ordered lambda triple.

    ``min_separation`` is the smallest ratio of value-space to angle-space
    distance (``inf`` when no neighbour was sampled).
    """
    theta = _as_triple(theta)
    base = np.array(theta.theta)
    lam0 = np.array(triple_cross_ratio(theta).lambdas)
    rng = np.random.default_rng(seed)
    used = 0
    min_ratio = math.inf
    min_dist = math.inf
    if radius > 0:
        for _ in range(int(samples)):
            r = radius * math.sqrt(rng.uniform())
            phi = rng.uniform(0.0, 2.0 * math.pi)
            delta = r * (math.cos(phi) * _PLANE[0] + math.sin(phi) * _PLANE[1])
            t = base + delta
            dn = float(np.linalg.norm(delta))
            if dn == 0.0 or not _is_usable(t):
                continue
            lam = np.array(triple_cross_ratio(AngleTriple.from_approximate(t, 1e-9)).lambdas)
            dv = float(np.linalg.norm(lam - lam0))
            used += 1
            min_dist = min(min_dist, dv)
            min_ratio = min(min_ratio, dv / dn)
    return ProbeResult(min_dist > 1e-10, min_ratio, used, min_dist)


def random_allowable_triples(n: int, seed: int = 0, margin: float = 1e-3) -> list:
    """Uniform allowable triples kept at least ``margin`` from the interval
    ends, from right angles and from equal pairs."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        a, b = rng.uniform(0.0, math.pi, 2)
        t = (a, b, 2.0 * math.pi - a - b)
        if not all(margin < x < math.pi - margin for x in t):
            continue
        if any(abs(x - math.pi / 2.0) < margin for x in t):
            continue
        if any(abs(t[i] - t[j]) < margin for i, j in itertools.combinations(range(3), 2)):
            continue
        out.append(AngleTriple.from_approximate(t, 1e-9))
    return out


def rank_scan(n: int, seed: int = 0, step: float = DEFAULT_STEP) -> list:
    """Rank certificates at ``n`` random triples, in sample order."""
    return [triple_map_jacobian(t, step) for t in random_allowable_triples(n, seed)]


def rank_grid(n: int, step: float = DEFAULT_STEP) -> list:
    """Rank certificates on an ``n`` x ``n`` grid of ``(t1, t2)`` cell
    centres in ``(0, pi)^2``, skipping points that are not allowable or lie
    on the excluded locus. Ordered by ``t1`` then ``t2``."""
    out = []
    for i in range(n):
        for j in range(n):
            t1 = (i + 0.5) * math.pi / n
            t2 = (j + 0.5) * math.pi / n
            t3 = 2.0 * math.pi - t1 - t2
            if not 0.0 < t3 < math.pi:
                continue
            try:
                out.append(triple_map_jacobian(AngleTriple.from_approximate((t1, t2, t3), 1e-9), step))
            except (ExcludedLocus, DegenerateTriple):
                continue
    return out


@dataclass(frozen=True)
class CollisionScanResult:
    """Closest pair in value space among well-separated sampled triples.

    An experiment about global injectivity, not a proof either way.
    """

    samples: int
    theta_a: Optional[tuple]
    theta_b: Optional[tuple]
    angle_distance: float
    value_distance: float


def collision_scan(samples: int, min_angle_distance: float = 0.1, seed: int = 0,
                   neighbours: int = 8) -> CollisionScanResult:
    from scipy.spatial import cKDTree

    triples = random_allowable_triples(samples, seed)
    thetas = np.array([t.theta for t in triples])
    values = np.array([triple_cross_ratio(t).lambdas for t in triples])
    tree = cKDTree(values)
    k = min(neighbours + 1, len(values))
    dist, idx = tree.query(values, k=k)
    best = (math.inf, None, None)
    for i in range(len(values)):
        for d, j in zip(np.atleast_1d(dist[i])[1:], np.atleast_1d(idx[i])[1:]):
            if np.linalg.norm(thetas[i] - thetas[j]) >= min_angle_distance and d < best[0]:
                best = (float(d), i, int(j))
    if best[1] is None:
        return CollisionScanResult(samples, None, None, math.nan, math.inf)
    _, i, j = best
    return CollisionScanResult(samples, tuple(thetas[i]), tuple(thetas[j]),
                               float(np.linalg.norm(thetas[i] - thetas[j])), best[0])
