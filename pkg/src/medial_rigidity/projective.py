"""Cross ratios of points on the real projective line, of concurrent lines in
the plane and of hyperplane pencils in R^n, plus the six-value reordering
orbit of a cross ratio.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DegenerateCrossRatio, DuplicatePoint, InvalidPencil, NotTransverse

# |sin(angle)| below which two lines are identified
LINE_TOL = 1e-9
ORBIT_TOL = 1e-9
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class ProjectiveScalar:
    """A real number or the single unsigned point at infinity."""

    value: float = 0.0
    is_inf: bool = False

    def __post_init__(self):
        if self.is_inf:
            object.__setattr__(self, "value", 0.0)
        elif not math.isfinite(self.value):
            raise ValueError(f"finite projective scalar required, got {self.value!r}")

    @classmethod
    def infinity(cls) -> "ProjectiveScalar":
        return cls(0.0, True)

    def __float__(self):
        return math.inf if self.is_inf else float(self.value)

    def __repr__(self):
        return "ProjectiveScalar(inf)" if self.is_inf else f"ProjectiveScalar({self.value!r})"


INF = ProjectiveScalar.infinity()

Scalar = Union[ProjectiveScalar, float, int]


def as_scalar(z: Scalar) -> ProjectiveScalar:
    """Coerce a float (``math.inf`` of either sign maps to ``INF``)."""
    if isinstance(z, ProjectiveScalar):
        return z
    z = float(z)
    if math.isnan(z):
        raise ValueError("NaN is not a projective scalar")
    if math.isinf(z):
        return INF
    return ProjectiveScalar(z)


def slope_of(direction) -> ProjectiveScalar:
    """Slope dy/dx of a planar direction; vertical directions give ``INF``."""
    dx, dy = float(direction[0]), float(direction[1])
    if dx == 0.0:
        if dy == 0.0:
            raise InvalidPencil("zero direction vector")
        return INF
    return ProjectiveScalar(dy / dx)


def cross_ratio(z1: Scalar, z2: Scalar, z3: Scalar, z4: Scalar, tol: float = 0.0) -> float:
    """Cross ratio ``(z1-z4)(z3-z2) / ((z1-z2)(z3-z4))`` on the extended line.

    If one argument is infinite the algebraic limit is returned, e.g.
    ``z4 = inf`` gives ``(z3-z2)/(z1-z2)``. For distinct inputs the result is
    always finite and lies outside {0, 1}.

    Raises
    ------
    DuplicatePoint
        If two inputs coincide (``|zi - zj| <= tol``) or two are infinite.
    """
    zs = [as_scalar(z) for z in (z1, z2, z3, z4)]
    for (i, a), (j, b) in itertools.combinations(enumerate(zs), 2):
        if a.is_inf or b.is_inf:
            if a.is_inf and b.is_inf:
                raise DuplicatePoint(f"entries {i + 1} and {j + 1} are both infinite")
        elif abs(a.value - b.value) <= tol:
            raise DuplicatePoint(f"entries {i + 1} and {j + 1} coincide ({a.value!r})")
    a, b, c, d = zs
    if a.is_inf:
        return (c.value - b.value) / (c.value - d.value)
    if b.is_inf:
        return (a.value - d.value) / (c.value - d.value)
    if c.is_inf:
        return (a.value - d.value) / (a.value - b.value)
    if d.is_inf:
        return (c.value - b.value) / (a.value - b.value)
    return ((a.value - d.value) * (c.value - b.value)) / (
        (a.value - b.value) * (c.value - d.value)
    )


def _dedupe_sorted(values: Iterable[float], tol: float) -> tuple:
    out = []
    for v in sorted(values):
        if out and abs(v - out[-1]) <= tol:
            continue
        out.append(v)
    return tuple(out)


@dataclass(frozen=True)
class CrossRatioOrbit:
    """Values a cross ratio takes under all 24 reorderings of its 4-tuple.

    ``values`` is sorted ascending with near-duplicates (1e-9) merged, so the
    harmonic orbit has 3 elements and every other real orbit has 6.
    """

    values: tuple
    representative: float

    def __len__(self):
        return len(self.values)

    def __contains__(self, lam):
        return any(abs(lam - v) <= ORBIT_TOL for v in self.values)


def orbit_images(lam: float) -> tuple:
    """The six images of ``lam`` under the S3 action, in the classical order
    ``(lam, 1/lam, 1-lam, 1/(1-lam), (lam-1)/lam, lam/(lam-1))``."""
    return (lam, 1.0 / lam, 1.0 - lam, 1.0 / (1.0 - lam), (lam - 1.0) / lam, lam / (lam - 1.0))


def orbit(lam: float, tol: float = ORBIT_TOL) -> CrossRatioOrbit:
    lam = float(lam)
    if not math.isfinite(lam) or abs(lam) < DEGENERATE_TOL or abs(lam - 1.0) < DEGENERATE_TOL:
        raise DegenerateCrossRatio(f"cross ratio {lam!r} lies in {{0, 1, inf}}")
    return CrossRatioOrbit(_dedupe_sorted(orbit_images(lam), tol), lam)


def orbit_distance(a: CrossRatioOrbit, b: CrossRatioOrbit) -> float:
    """Hausdorff distance between two orbit value sets (absolute difference)."""
    va = np.asarray(a.values)
    vb = np.asarray(b.values)
    d = np.abs(va[:, None] - vb[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


# ---------------------------------------------------------------------------
# Line pencils in the plane
# ---------------------------------------------------------------------------

def _sin_between(u, v) -> float:
    return abs(u[0] * v[1] - u[1] * v[0]) / (math.hypot(*u) * math.hypot(*v))


@dataclass(frozen=True, eq=False)
class LinePencil2D:
    """Four ordered distinct lines through the origin of R^2, each given by a
    direction vector (sign and scale are irrelevant)."""

    directions: np.ndarray

    def __post_init__(self):
        d = np.array(self.directions, dtype=float)
        if d.shape != (4, 2):
            raise InvalidPencil(f"expected 4 planar directions, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise InvalidPencil("non-finite direction")
        if np.any(np.hypot(d[:, 0], d[:, 1]) == 0):
            raise InvalidPencil("zero direction vector")
        for i, j in itertools.combinations(range(4), 2):
            if _sin_between(d[i], d[j]) < LINE_TOL:
                raise DuplicatePoint(f"lines {i + 1} and {j + 1} are parallel")
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)

    @classmethod
    def from_slopes(cls, slopes: Sequence[Scalar]) -> "LinePencil2D":
        dirs = []
        for s in slopes:
            s = as_scalar(s)
            dirs.append((0.0, 1.0) if s.is_inf else (1.0, s.value))
        return cls(np.array(dirs))

    def transformed(self, matrix) -> "LinePencil2D":
        return LinePencil2D(self.directions @ np.asarray(matrix, dtype=float).T)


def _rotation_avoiding_vertical(directions: np.ndarray) -> float:
    # Put the vertical direction in the middle of the widest angular gap of
    # the line angles mod pi.
    ang = np.sort(np.mod(np.arctan2(directions[:, 1], directions[:, 0]), math.pi))
    gaps = np.diff(np.append(ang, ang[0] + math.pi))
    k = int(np.argmax(gaps))
    middle = ang[k] + gaps[k] / 2.0
    return math.pi / 2.0 - middle


def line_cross_ratio(pencil: LinePencil2D, method: str = "rotate") -> float:
    """Cross ratio of four concurrent lines through their slopes.

    ``method="rotate"`` first rotates all lines so none is vertical and uses
    finite slopes; ``method="slopes"`` reads slopes directly, a vertical line
    contributing the point at infinity. Both agree up to rounding.
    """
    d = pencil.directions
    if method == "rotate":
        phi = _rotation_avoiding_vertical(d)
        c, s = math.cos(phi), math.sin(phi)
        d = d @ np.array([[c, -s], [s, c]]).T
    elif method != "slopes":
        raise ValueError(f"unknown method {method!r}")
    return cross_ratio(*(slope_of(v) for v in d))


# ---------------------------------------------------------------------------
# Hyperplane pencils
# ---------------------------------------------------------------------------

def orthogonal_complement(basis: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis (rows) of the orthogonal complement of span(rows)."""
    basis = np.asarray(basis, dtype=float).reshape(-1, n)
    if basis.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(basis)
    rank = int(np.sum(s > 1e-9 * max(1.0, s[0])))
    return vt[rank:]


@dataclass(frozen=True, eq=False)
class HyperplanePencil:
    """Four ordered hyperplanes of R^n through a common codimension-2
    subspace (the axis).

    ``axis`` holds an orthonormal basis of the axis as rows (``n-2`` of
    them), ``normals`` the unit normal of each hyperplane.
    """

    ambient_dim: int
    axis: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        n = int(self.ambient_dim)
        if n < 2:
            raise InvalidPencil("ambient dimension must be >= 2")
        axis = np.array(self.axis, dtype=float).reshape(-1, n) if n > 2 else np.zeros((0, n))
        normals = np.array(self.normals, dtype=float)
        if axis.shape != (n - 2, n):
            raise InvalidPencil(f"axis must have {n - 2} basis vectors of length {n}")
        if normals.shape != (4, n):
            raise InvalidPencil(f"need 4 normals in R^{n}, got shape {normals.shape}")
        if axis.size and not np.allclose(axis @ axis.T, np.eye(n - 2), atol=1e-9):
            raise InvalidPencil("axis basis is not orthonormal")
        norms = np.linalg.norm(normals, axis=1)
        if np.any(norms < 1e-12):
            raise InvalidPencil("zero hyperplane normal")
        normals = normals / norms[:, None]
        if axis.size:
            worst = float(np.abs(normals @ axis.T).max())
            if worst > 1e-9:
                raise InvalidPencil(f"hyperplane does not contain the axis (|n.a| = {worst:.3g})")
        coords = normals @ orthogonal_complement(axis, n).T
        for i, j in itertools.combinations(range(4), 2):
            if _sin_between(coords[i], coords[j]) < LINE_TOL:
                raise DuplicatePoint(f"hyperplanes {i + 1} and {j + 1} coincide")
        axis.setflags(write=False)
        normals.setflags(write=False)
        object.__setattr__(self, "ambient_dim", n)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "normals", normals)

    def transformed(self, matrix) -> "HyperplanePencil":
        """Image of the pencil under the invertible linear map ``matrix``."""
        a = np.asarray(matrix, dtype=float)
        n = self.ambient_dim
        # normals transform by the inverse transpose; the axis by a itself
        normals = np.linalg.solve(a.T, self.normals.T).T
        axis = self.axis @ a.T
        if axis.size:
            q, _ = np.linalg.qr(axis.T)
            axis = q.T
        return HyperplanePencil(n, axis, normals)


def hyperplane_cross_ratio(pencil: HyperplanePencil, transverse_plane=None,
                           method: str = "rotate") -> float:
    """Cross ratio of a hyperplane pencil, read off in a transverse plane.

    Each hyperplane meets the plane (default: the orthogonal complement of
    the axis) in a line; the result is the cross ratio of those four lines
    and does not depend on which transverse plane is used.

    Raises
    ------
    NotTransverse
        If ``transverse_plane`` (two spanning vectors, as rows) is not
        2-dimensional or does not span R^n together with the axis.
    """
    n = pencil.ambient_dim
    if transverse_plane is None:
        plane = orthogonal_complement(pencil.axis, n)
    else:
        plane = np.asarray(transverse_plane, dtype=float)
        if plane.shape != (2, n):
            raise NotTransverse(f"transverse plane needs 2 vectors in R^{n}")
        q, _ = np.linalg.qr(plane.T)
        plane = q.T
        s = np.linalg.svd(np.vstack([pencil.axis, plane]), compute_uv=False)
        if s[-1] <= 1e-9:
            raise NotTransverse(f"plane is not transverse to the axis (sigma_min = {s[-1]:.3g})")
    c = pencil.normals @ plane.T
    # H_i meets the plane in {s p1 + t p2 : s c1 + t c2 = 0}
    directions = np.column_stack([-c[:, 1], c[:, 0]])
    return line_cross_ratio(LinePencil2D(directions), method=method)

