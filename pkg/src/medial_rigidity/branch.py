"""Angle relations at Y-branch (three sheets) and X-branch (four sheets)
points of a medial axis, and the reduction of a codimension-2 branching
stratum in R^n to a planar configuration in the plane orthogonal to it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateSheet,
    Incompatible,
    InvalidConfig,
    NotAllowable,
    OutOfRange,
)
from .projective import orthogonal_complement

TWO_PI = 2.0 * math.pi
SUM_TOL = 1e-12
COMPAT_TOL = 1e-9


def _check_angles(theta: Sequence[float], k: int, sum_tol: float) -> tuple:
    theta = tuple(float(t) for t in theta)
    if len(theta) != k:
        raise ValueError(f"expected {k} angles, got {len(theta)}")
    for i, t in enumerate(theta):
        if not (0.0 < t < math.pi):
            raise OutOfRange(f"theta{i + 1} = {t!r} is not in (0, pi)")
    excess = math.fsum(theta) - TWO_PI
    if abs(excess) > sum_tol:
        raise NotAllowable(f"angles sum to 2*pi {excess:+.3g}")
    return theta


def _rebalance(theta: Sequence[float], k: int, sum_tol: float) -> tuple:
    theta = tuple(float(t) for t in theta)
    if len(theta) != k:
        raise ValueError(f"expected {k} angles, got {len(theta)}")
    excess = math.fsum(theta) - TWO_PI
    if abs(excess) > sum_tol:
        raise NotAllowable(f"angles sum to 2*pi {excess:+.3g}")
    return tuple(t - excess / k for t in theta)


@dataclass(frozen=True)
class AngleTriple:
    """Successive angles between the three sheets at a Y-branch point."""

    theta: tuple

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_angles(self.theta, 3, SUM_TOL))

    @classmethod
    def from_approximate(cls, theta: Sequence[float], sum_tol: float = 1e-6) -> "AngleTriple":
        """Accept angles whose sum misses 2*pi by at most ``sum_tol`` and
        spread the excess equally over the three angles."""
        return cls(_rebalance(theta, 3, sum_tol))

    def rotated(self, shift: int = 1) -> "AngleTriple":
        s = shift % 3
        return AngleTriple(self.theta[s:] + self.theta[:s])

    def __iter__(self):
        return iter(self.theta)

    def __getitem__(self, i):
        return self.theta[i]


@dataclass(frozen=True)
class AngleQuad:
    """Successive angles between four sheets meeting along a branch stratum."""

    theta: tuple

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_angles(self.theta, 4, SUM_TOL))

    @classmethod
    def from_approximate(cls, theta: Sequence[float], sum_tol: float = 1e-6) -> "AngleQuad":
        return cls(_rebalance(theta, 4, sum_tol))

    def __iter__(self):
        return iter(self.theta)

    def __getitem__(self, i):
        return self.theta[i]


def _as_triple(theta) -> AngleTriple:
    return theta if isinstance(theta, AngleTriple) else AngleTriple(tuple(theta))


def _as_quad(theta) -> AngleQuad:
    return theta if isinstance(theta, AngleQuad) else AngleQuad(tuple(theta))


def solve_y_branch_angles(theta) -> tuple:
    """Half-angles at a Y-branch: ``alpha_i = pi - theta_i``.

    These solve ``theta1 = alpha2 + alpha3``, ``theta2 = alpha3 + alpha1``,
    ``theta3 = alpha1 + alpha2``; the sector of angle ``theta_i`` is split by
    its radial vector into the two equal-angle halves flanking it.
    """
    theta = _as_triple(theta)
    return tuple(math.pi - t for t in theta)


@dataclass(frozen=True)
class XCompatibility:
    compatible: bool
    residual: float


def check_x_branch_compatibility(theta, tol: float = COMPAT_TOL) -> XCompatibility:
    """Necessary condition ``theta1 + theta3 = theta2 + theta4`` for radial
    vectors obeying the equal-angle property at a four-sheet branch."""
    t1, t2, t3, t4 = _as_quad(theta)
    residual = abs((t1 + t3) - (t2 + t4))
    return XCompatibility(residual < tol, residual)


@dataclass(frozen=True)
class BetaFamily:
    beta: tuple
    admissible: bool
    t: float


def x_branch_beta_family(theta, t: float, tol: float = COMPAT_TOL) -> BetaFamily:
    """Radial angles at a four-sheet branch for the family parameter ``t``.

    ``beta = (theta4 - t, theta1 - theta4 + t, theta3 - t, t)``, where
    ``beta_i`` is measured counterclockwise from line ``i`` to the radial
    vector in sector ``i``. ``admissible`` is True when every radial vector
    lies strictly inside its sector, i.e. all ``beta_i > 0``.
    """
    quad = _as_quad(theta)
    compat = check_x_branch_compatibility(quad, tol)
    if not compat.compatible:
        raise Incompatible(f"theta1 + theta3 - theta2 - theta4 = {compat.residual:.3g}")
    t1, _, t3, t4 = quad
    t = float(t)
    beta = (t4 - t, t1 - t4 + t, t3 - t, t)
    return BetaFamily(beta, all(b > 0.0 for b in beta), t)


# ---------------------------------------------------------------------------
# Planar configurations
# ---------------------------------------------------------------------------

def _angle_of(v) -> float:
    a = math.atan2(v[1], v[0]) % TWO_PI
    # directions a hair below the positive x-axis count as angle 0
    return 0.0 if a > TWO_PI - 1e-12 else a


def _ccw(a: float, b: float) -> float:
    """Counterclockwise angle from direction angle ``a`` to ``b`` in [0, 2pi)."""
    return (b - a) % TWO_PI


@dataclass(frozen=True, eq=False)
class BranchConfig2D:
    """Branch tangent directions and radial vectors at a planar branch point.

    ``tangents[i]`` is the unit direction of branch ``i`` (a half-line from the
    branch point), listed counterclockwise. ``radials[i]`` lies in the open
    sector from ``tangents[i]`` to ``tangents[i+1]``; it keeps its length.
    """

    tangents: np.ndarray
    radials: np.ndarray
    angles: tuple = field(init=False)

    def __post_init__(self):
        tan = np.array(self.tangents, dtype=float)
        rad = np.array(self.radials, dtype=float)
        k = len(tan)
        if k not in (3, 4) or tan.shape != (k, 2) or rad.shape != (k, 2):
            raise InvalidConfig("need 3 or 4 planar tangents and as many radial vectors")
        norms = np.hypot(tan[:, 0], tan[:, 1])
        if np.any(norms < 1e-12):
            raise InvalidConfig("zero tangent direction")
        tan = tan / norms[:, None]
        phi = [_angle_of(v) for v in tan]
        gaps = tuple(_ccw(phi[i], phi[(i + 1) % k]) for i in range(k))
        if abs(math.fsum(gaps) - TWO_PI) > 1e-9 or min(gaps) < 1e-9:
            raise InvalidConfig("tangents are not in strict counterclockwise order")
        for i in range(k):
            if np.hypot(*rad[i]) < 1e-12:
                raise InvalidConfig(f"radial vector {i} is zero")
            inside = _ccw(phi[i], _angle_of(rad[i]))
            if not (0.0 < inside < gaps[i]):
                raise InvalidConfig(f"radial vector {i} is not inside sector {i}")
        tan.setflags(write=False)
        rad.setflags(write=False)
        object.__setattr__(self, "tangents", tan)
        object.__setattr__(self, "radials", rad)
        object.__setattr__(self, "angles", gaps)

    @classmethod
    def from_directions(cls, tangents, radials) -> "BranchConfig2D":
        """Sort tangents counterclockwise by angle in [0, 2pi) and place each
        radial vector in the sector that contains it."""
        tan = np.asarray(tangents, dtype=float)
        rad = np.asarray(radials, dtype=float)
        if len(tan) != len(rad):
            raise InvalidConfig("tangent and radial counts differ")
        order = sorted(range(len(tan)), key=lambda i: _angle_of(tan[i]))
        tan = tan[order]
        phi = [_angle_of(v) for v in tan]
        k = len(tan)
        for i in range(k):
            if _ccw(phi[i], phi[(i + 1) % k]) < 1e-9 and k > 1:
                raise DegenerateSheet(f"tangent directions {i} and {(i + 1) % k} coincide")
        slots = [None] * k
        for v in rad:
            psi = _angle_of(v)
            for i in range(k):
                if 0.0 < _ccw(phi[i], psi) < _ccw(phi[i], phi[(i + 1) % k]):
                    if slots[i] is not None:
                        raise InvalidConfig(f"sector {i} holds two radial vectors")
                    slots[i] = v
                    break
            else:
                raise InvalidConfig("radial vector lies along a tangent direction")
        if any(s is None for s in slots):
            raise InvalidConfig("some sector has no radial vector")
        return cls(tan, np.array(slots))

    @property
    def k(self) -> int:
        return len(self.tangents)

    def radial_offsets(self) -> tuple:
        """Counterclockwise angle from ``tangents[i]`` to ``radials[i]``."""
        return tuple(_ccw(_angle_of(t), _angle_of(u)) for t, u in zip(self.tangents, self.radials))

    def angle_triple(self) -> AngleTriple:
        if self.k != 3:
            raise InvalidConfig("not a three-sheet configuration")
        return AngleTriple.from_approximate(self.angles, 1e-9)

    def angle_quad(self) -> AngleQuad:
        if self.k != 4:
            raise InvalidConfig("not a four-sheet configuration")
        return AngleQuad.from_approximate(self.angles, 1e-9)

    def transformed(self, matrix) -> "BranchConfig2D":
        """Apply a linear map to every direction; reorders if it reverses
        orientation."""
        a = np.asarray(matrix, dtype=float)
        return BranchConfig2D.from_directions(self.tangents @ a.T, self.radials @ a.T)


def _unit(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)])


def y_branch_config(theta, start: float = 0.0, radius: float = 1.0) -> BranchConfig2D:
    """The Blum configuration with sector angles ``theta``; the first branch
    points at angle ``start``."""
    theta = _as_triple(theta)
    alpha = solve_y_branch_angles(theta)
    phi = [start, start + theta[0], start + theta[0] + theta[1]]
    # the radial vector in sector i sits alpha_{i+1} past branch i
    offsets = [alpha[(i + 1) % 3] for i in range(3)]
    tangents = np.array([_unit(p) for p in phi])
    radials = radius * np.array([_unit(p + o) for p, o in zip(phi, offsets)])
    return BranchConfig2D(tangents, radials)


def x_branch_config(theta, t: float, start: float = 0.0, radius: float = 1.0) -> BranchConfig2D:
    """Four-sheet configuration whose radial offsets come from the beta family."""
    quad = _as_quad(theta)
    fam = x_branch_beta_family(quad, t)
    if not fam.admissible:
        raise InvalidConfig(f"t = {t!r} is not admissible: beta = {fam.beta}")
    phi = np.cumsum((0.0,) + quad.theta[:3]) + start
    tangents = np.array([_unit(p) for p in phi])
    radials = radius * np.array([_unit(p + b) for p, b in zip(phi, fam.beta)])
    return BranchConfig2D(tangents, radials)


@dataclass(frozen=True)
class BlumCheck:
    ok: bool
    max_violation: float
    violations: tuple


def validate_blum_config(config: BranchConfig2D, tol: float = 1e-9) -> BlumCheck:
    """Worst violation of the equal-angle property over all branch lines.

    At line ``i`` the angle back to the radial vector of sector ``i-1`` is
    compared with the angle forward to the radial vector of sector ``i``.
    """
    k = config.k
    phi = [_angle_of(t) for t in config.tangents]
    psi = [_angle_of(u) for u in config.radials]
    viol = []
    for i in range(k):
        back = _ccw(psi[i - 1], phi[i])
        forward = _ccw(phi[i], psi[i])
        viol.append(abs(back - forward))
    worst = max(viol)
    return BlumCheck(worst < tol, worst, tuple(viol))


# ---------------------------------------------------------------------------
# Reduction of a branching stratum to its orthogonal plane
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StratumPointData:
    """Data at a point of a codimension-2 branching stratum in R^n.

    ``stratum_tangent`` is an orthonormal basis (rows) of the stratum's
    tangent space. Each limiting sheet tangent half-space is given by a unit
    vector ``sheet_directions[i]`` lying in it and pointing into the sheet;
    the hyperplane itself is span(stratum_tangent, sheet_directions[i]).
    """

    ambient_dim: int
    stratum_tangent: np.ndarray
    sheet_directions: np.ndarray
    radial_vectors: np.ndarray

    def __post_init__(self):
        n = int(self.ambient_dim)
        st = np.array(self.stratum_tangent, dtype=float).reshape(-1, n) if n > 2 else np.zeros((0, n))
        sd = np.array(self.sheet_directions, dtype=float)
        rv = np.array(self.radial_vectors, dtype=float)
        if st.shape != (n - 2, n):
            raise InvalidConfig(f"stratum tangent needs {n - 2} vectors in R^{n}")
        if st.size and not np.allclose(st @ st.T, np.eye(n - 2), atol=1e-9):
            raise InvalidConfig("stratum tangent basis is not orthonormal")
        if sd.ndim != 2 or sd.shape[1] != n or sd.shape[0] not in (3, 4):
            raise InvalidConfig("need 3 or 4 sheet directions in R^n")
        if rv.shape != sd.shape:
            raise InvalidConfig("need one radial vector per sheet")
        object.__setattr__(self, "ambient_dim", n)
        object.__setattr__(self, "stratum_tangent", st)
        object.__setattr__(self, "sheet_directions", sd)
        object.__setattr__(self, "radial_vectors", rv)

    def transverse_basis(self) -> np.ndarray:
        """Orthonormal basis (rows) of the plane orthogonal to the stratum.

        The first vector is the trace of sheet 0; the second completes a
        basis positively oriented after the stratum basis.
        """
        n = self.ambient_dim
        perp = orthogonal_complement(self.stratum_tangent, n)
        d0 = perp @ self.sheet_directions[0]
        if np.linalg.norm(d0) < 1e-9:
            raise DegenerateSheet("sheet 0 is tangent to the stratum")
        d0 = d0 / np.linalg.norm(d0)
        e1 = d0 @ perp
        e2 = np.array([-d0[1], d0[0]]) @ perp
        frame = np.vstack([self.stratum_tangent, e1, e2])
        if np.linalg.det(frame) < 0:
            e2 = -e2
        return np.vstack([e1, e2])

    def transformed(self, matrix) -> "StratumPointData":
        """Image under an orthogonal map (keeps the stratum basis orthonormal)."""
        q = np.asarray(matrix, dtype=float)
        return StratumPointData(
            self.ambient_dim,
            self.stratum_tangent @ q.T,
            self.sheet_directions @ q.T,
            self.radial_vectors @ q.T,
        )


def reduce_to_transverse_plane(data: StratumPointData) -> BranchConfig2D:
    """Trace every sheet and radial vector in the plane P orthogonal to the
    stratum and return the planar configuration (in P's coordinates)."""
    plane = data.transverse_basis()
    traces = data.sheet_directions @ plane.T
    for i, tr in enumerate(traces):
        if np.linalg.norm(tr) < 1e-9:
            raise DegenerateSheet(f"sheet {i} has no trace in the transverse plane")
    radials = data.radial_vectors @ plane.T
    norms = np.linalg.norm(radials, axis=1)
    if np.any(norms < 1e-12):
        raise DegenerateSheet("radial vector lies in the stratum tangent space")
    return BranchConfig2D.from_directions(traces, radials / norms[:, None])


def lift_config(config: BranchConfig2D, stratum_tangent, plane_basis,
                stratum_components=None) -> StratumPointData:
    """Embed a planar configuration in R^n along a stratum.

    ``plane_basis`` (2 rows) and ``stratum_tangent`` must together form an
    orthonormal basis. ``stratum_components`` optionally adds a stratum-
    tangent component to each radial vector (the ``v`` of U = v + a e1 + b e2).
    """
    plane = np.asarray(plane_basis, dtype=float)
    st = np.asarray(stratum_tangent, dtype=float).reshape(-1, plane.shape[1])
    radials = config.radials @ plane
    if stratum_components is not None:
        radials = radials + np.asarray(stratum_components, dtype=float)
    return StratumPointData(plane.shape[1], st, config.tangents @ plane, radials)
