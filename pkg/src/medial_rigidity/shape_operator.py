"""Second-order compatibility of a medial-preserving diffeomorphism.

Radial shape operators of parameterized medial sheets, the radial
distortion operator built from the second derivative of a diffeomorphism,
the radial scale factor, and the check

    S' = sigma * (S + Q)

in the image basis ``v' = dphi(v)``.

Conventions: ``S_rad(v) = -proj_U(d_v U1)``, where ``U1 = U/|U|`` and
``proj_U`` projects onto the tangent space along the radial line; the scale
factor is ``sigma = r / r'`` (radius at the source over radius at the image).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import (
    BasisMismatch,
    InvalidConfig,
    NotInvertible,
    PointNotOnTarget,
    ProjectionSingular,
    RadialLineNotPreserved,
    SchemaError,
)

PARAM_STEP = 1e-5
JACOBIAN_STEP = 1e-6
HESSIAN_STEP = 1e-4
ANALYTIC_TOL = 1e-9
NUMERIC_TOL = 1e-4


def central_jacobian(f: Callable, u, step: float) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    cols = []
    for e in np.eye(len(u)):
        cols.append((np.asarray(f(u + step * e)) - np.asarray(f(u - step * e))) / (2.0 * step))
    return np.column_stack(cols)


def central_hessian(f: Callable, x, step: float) -> np.ndarray:
    """``H[k, a, b] = d^2 f_k / dx_a dx_b`` by mixed central differences,
    symmetrized."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    m = len(np.atleast_1d(f(x)))
    h = np.zeros((m, n, n))
    eye = np.eye(n) * step
    for a in range(n):
        for b in range(a, n):
            val = (
                np.asarray(f(x + eye[a] + eye[b])) - np.asarray(f(x + eye[a] - eye[b]))
                - np.asarray(f(x - eye[a] + eye[b])) + np.asarray(f(x - eye[a] - eye[b]))
            ) / (4.0 * step * step)
            h[:, a, b] = val
            h[:, b, a] = val
    return 0.5 * (h + h.transpose(0, 2, 1))


# ---------------------------------------------------------------------------
# Polynomial maps (file-backed patches and diffeomorphisms)
# ---------------------------------------------------------------------------

class PolynomialMap:
    """Map R^m -> R^k with one dense coefficient array per output.

    ``coefficients[k][i1]...[im]`` multiplies ``x1**i1 * ... * xm**im``.
    """

    def __init__(self, coefficients, domain=None):
        self.coefficients = [np.asarray(c, dtype=float) for c in coefficients]
        dims = {c.ndim for c in self.coefficients}
        if len(dims) != 1:
            raise InvalidConfig("all outputs need coefficient arrays of the same rank")
        self.in_dim = dims.pop()
        self.out_dim = len(self.coefficients)
        self.domain = None if domain is None else np.asarray(domain, dtype=float)
        self._first = [[npoly.polyder(c, axis=a) for a in range(self.in_dim)]
                       for c in self.coefficients]
        self._second = [[[npoly.polyder(da, axis=b) for b in range(self.in_dim)] for da in row]
                        for row in self._first]

    @staticmethod
    def _eval(c, x):
        val = c
        for xa in x:
            val = npoly.polyval(xa, val)
        return float(val)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([self._eval(c, x) for c in self.coefficients])

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([[self._eval(d, x) for d in row] for row in self._first])

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([[[self._eval(d, x) for d in r2] for r2 in r1] for r1 in self._second])

    @property
    def degree(self) -> int:
        return max(s - 1 for c in self.coefficients for s in c.shape)

    def to_json(self) -> list:
        return [c.tolist() for c in self.coefficients]


# ---------------------------------------------------------------------------
# Medial sheets and diffeomorphisms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MedialSheetPatch:
    """A parameterized smooth medial sheet ``x(u)`` in R^n with radial field
    ``U(u)``; ``u`` ranges over a box in R^(n-1).

    Derivative callbacks are optional; missing ones fall back to central
    differences with step ``step``.
    """

    position: Callable
    radial: Callable
    position_jacobian: Optional[Callable] = None
    radial_jacobian: Optional[Callable] = None
    domain: Optional[np.ndarray] = None
    step: float = PARAM_STEP

    @property
    def analytic(self) -> bool:
        return self.position_jacobian is not None and self.radial_jacobian is not None

    def x(self, u) -> np.ndarray:
        return np.asarray(self.position(np.asarray(u, dtype=float)), dtype=float)

    def U(self, u) -> np.ndarray:
        return np.asarray(self.radial(np.asarray(u, dtype=float)), dtype=float)

    def r(self, u) -> float:
        r = float(np.linalg.norm(self.U(u)))
        if r <= 0.0:
            raise InvalidConfig("radial vector vanishes")
        return r

    def unit_radial(self, u) -> np.ndarray:
        return self.U(u) / self.r(u)

    def dx(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.position_jacobian is not None:
            j = np.asarray(self.position_jacobian(u), dtype=float)
        else:
            j = central_jacobian(self.x, u, self.step)
        j = j.reshape(-1, len(u))
        s = np.linalg.svd(j, compute_uv=False)
        if s[-1] <= 1e-8:
            raise InvalidConfig("parameterization is not an immersion here")
        return j

    def dU(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.radial_jacobian is not None:
            return np.asarray(self.radial_jacobian(u), dtype=float).reshape(-1, len(u))
        return central_jacobian(self.U, u, self.step)

    def dU1(self, u) -> np.ndarray:
        """Derivative of the unit radial field."""
        U = self.U(u)
        r = float(np.linalg.norm(U))
        U1 = U / r
        dU = self.dU(u)
        return (dU - np.outer(U1, U1 @ dU)) / r

    @classmethod
    def from_polynomials(cls, position: PolynomialMap, radial: PolynomialMap,
                         domain=None) -> "MedialSheetPatch":
        return cls(position, radial, position.jacobian, radial.jacobian,
                   None if domain is None else np.asarray(domain, dtype=float))


@dataclass(frozen=True, eq=False)
class DiffeoPatch:
    """A local diffeomorphism of R^n with optional analytic derivatives.

    ``hessian(x)[k, a, b]`` is ``d^2 phi_k / dx_a dx_b``.
    """

    map: Callable
    jacobian: Optional[Callable] = None
    hessian: Optional[Callable] = None
    jacobian_step: float = JACOBIAN_STEP
    hessian_step: float = HESSIAN_STEP

    @property
    def analytic(self) -> bool:
        return self.jacobian is not None and self.hessian is not None

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.map(np.asarray(x, dtype=float)), dtype=float)

    def d(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.jacobian is not None:
            j = np.asarray(self.jacobian(x), dtype=float)
        else:
            j = central_jacobian(self, x, self.jacobian_step)
        if abs(np.linalg.det(j)) <= 1e-10:
            raise NotInvertible("dphi is singular at this point")
        return j

    def d2(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hessian is not None:
            return np.asarray(self.hessian(x), dtype=float)
        return central_hessian(self, x, self.hessian_step)

    def second_derivative(self, x, v, w) -> np.ndarray:
        """Symmetric bilinear form ``d^2 phi_x(v, w)``."""
        return np.einsum("kab,a,b->k", self.d2(x), np.asarray(v, float), np.asarray(w, float))

    @classmethod
    def from_polynomial(cls, poly: PolynomialMap) -> "DiffeoPatch":
        return cls(poly, poly.jacobian, poly.hessian)


def identity_diffeo(n: int) -> DiffeoPatch:
    return affine_diffeo(np.eye(n), np.zeros(n))


def affine_diffeo(matrix, offset=None) -> DiffeoPatch:
    a = np.asarray(matrix, dtype=float)
    b = np.zeros(len(a)) if offset is None else np.asarray(offset, dtype=float)
    n = len(a)
    return DiffeoPatch(lambda x: a @ x + b, lambda x: a, lambda x: np.zeros((n, n, n)))


def circle_sheet(radius: float, radial_length: float, center=(0.0, 0.0),
                 outward: bool = True) -> MedialSheetPatch:
    """Circle of the given radius (medial axis of an annulus) with radial
    vectors of constant length pointing away from (or toward) the center."""
    c = np.asarray(center, dtype=float)
    s = 1.0 if outward else -1.0
    R, rl = float(radius), float(radial_length)

    def pos(u):
        return c + R * np.array([math.cos(u[0]), math.sin(u[0])])

    def dpos(u):
        return R * np.array([[-math.sin(u[0])], [math.cos(u[0])]])

    def rad(u):
        return s * rl * np.array([math.cos(u[0]), math.sin(u[0])])

    def drad(u):
        return s * rl * np.array([[-math.sin(u[0])], [math.cos(u[0])]])

    return MedialSheetPatch(pos, rad, dpos, drad)


def line_sheet(radial_length: float, side: float = 1.0) -> MedialSheetPatch:
    """The x-axis as the medial axis of a horizontal strip."""
    rl = float(radial_length)
    return MedialSheetPatch(
        lambda u: np.array([u[0], 0.0]),
        lambda u: np.array([0.0, side * rl]),
        lambda u: np.array([[1.0], [0.0]]),
        lambda u: np.zeros((2, 1)),
    )


def numeric_copy(patch: MedialSheetPatch) -> MedialSheetPatch:
    """The same sheet with derivative callbacks dropped (finite differences)."""
    return MedialSheetPatch(patch.position, patch.radial, domain=patch.domain, step=patch.step)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

def _tangent_coefficients(vectors: np.ndarray, basis: np.ndarray, radial: np.ndarray) -> np.ndarray:
    """Coefficients on ``basis`` of ``vectors`` projected along ``radial``."""
    n, m = basis.shape
    frame = np.column_stack([basis, radial])
    scaled = frame / np.linalg.norm(frame, axis=0)
    if np.linalg.svd(scaled, compute_uv=False)[-1] < 1e-10:
        raise ProjectionSingular("radial direction lies in the tangent space")
    coef = np.linalg.solve(frame, vectors.reshape(n, -1))
    return coef[:m]


def _parameter_directions(patch: MedialSheetPatch, u, basis) -> tuple:
    dx = patch.dx(u)
    if basis is None:
        return dx, np.eye(dx.shape[1])
    v = np.asarray(basis, dtype=float).reshape(dx.shape)
    w, *_ = np.linalg.lstsq(dx, v, rcond=None)
    if np.linalg.norm(dx @ w - v) > 1e-8 * max(1.0, np.linalg.norm(v)):
        raise BasisMismatch("basis vectors are not tangent to the sheet")
    if abs(np.linalg.det(w)) < 1e-12:
        raise BasisMismatch("basis vectors are linearly dependent")
    return v, w


@dataclass(frozen=True, eq=False)
class RadialShapeMatrix:
    """Matrix of the radial shape operator: ``S(v_i) = sum_k matrix[k, i] v_k``."""

    basis: np.ndarray
    matrix: np.ndarray


def radial_shape_matrix(patch: MedialSheetPatch, u, basis=None) -> RadialShapeMatrix:
    """Radial shape operator at ``x(u)`` in ``basis`` (ambient tangent
    vectors as columns; default: the coordinate vectors ``dx/du``)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v, w = _parameter_directions(patch, u, basis)
    derivs = patch.dU1(u) @ w
    coef = _tangent_coefficients(derivs, v, patch.U(u))
    return RadialShapeMatrix(v, -coef)


def project_to_sheet(patch: MedialSheetPatch, point, u0, tol: float = 1e-10,
                     max_iter: int = 50) -> tuple:
    """Damped Gauss-Newton for the parameter whose image is nearest ``point``.

    Returns ``(u, distance)``.
    """
    point = np.asarray(point, dtype=float)
    u = np.atleast_1d(np.asarray(u0, dtype=float)).copy()
    res = patch.x(u) - point
    cost = float(res @ res)
    for _ in range(max_iter):
        j = patch.dx(u)
        step, *_ = np.linalg.lstsq(j, -res, rcond=None)
        lam = 1.0
        while lam > 1e-6:
            trial = u + lam * step
            r_t = patch.x(trial) - point
            c_t = float(r_t @ r_t)
            if c_t <= cost:
                break
            lam *= 0.5
        else:
            break
        u, res, cost = trial, r_t, c_t
        if np.linalg.norm(lam * step) < tol:
            break
    return u, math.sqrt(cost)


def scale_sigma(patch1: MedialSheetPatch, phi: DiffeoPatch, patch2: MedialSheetPatch, u,
                u2_guess=None, on_target_tol: float = 1e-8) -> tuple:
    """Scale factor ``r1(u) / r2(u')`` with ``x2(u') = phi(x1(u))``.

    Returns ``(sigma, u')``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    target = phi(patch1.x(u))
    u2, dist = project_to_sheet(patch2, target, u if u2_guess is None else u2_guess)
    if dist > on_target_tol:
        raise PointNotOnTarget(f"phi(x) is {dist:.3g} away from the target sheet")
    return patch1.r(u) / patch2.r(u2), u2


@dataclass(frozen=True, eq=False)
class DistortionMatrix:
    basis: np.ndarray
    matrix: np.ndarray
    sigma: float


def distortion_matrix(patch1: MedialSheetPatch, phi: DiffeoPatch, u, basis=None,
                      patch2: Optional[MedialSheetPatch] = None,
                      image_radial=None) -> DistortionMatrix:
    """Radial distortion operator ``Q(v) = -dphi^-1 proj_U'(d^2 phi_x(v, U1))``.

    The image radial direction ``U'`` comes from ``image_radial``, else from
    ``patch2`` at the image point, else is taken as ``dphi(U)``. ``sigma``
    is ``r/r'`` with ``r'`` taken from the same source.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v, _ = _parameter_directions(patch1, u, basis)
    x = patch1.x(u)
    U = patch1.U(u)
    U1 = U / np.linalg.norm(U)
    dphi = phi.d(x)
    if image_radial is not None:
        u_img = np.asarray(image_radial, dtype=float)
        sigma = float(np.linalg.norm(U) / np.linalg.norm(u_img))
    elif patch2 is not None:
        sigma, u2 = scale_sigma(patch1, phi, patch2, u)
        u_img = patch2.U(u2)
    else:
        u_img = dphi @ U
        sigma = float(np.linalg.norm(U) / np.linalg.norm(u_img))
    hess = phi.d2(x)
    second = np.einsum("kab,ai,b->ki", hess, v, U1)
    v_img = dphi @ v
    coef = _tangent_coefficients(second, v_img, u_img)
    projected = v_img @ coef
    pulled = np.linalg.solve(dphi, projected)
    q, *_ = np.linalg.lstsq(v, pulled, rcond=None)
    return DistortionMatrix(v, -q, sigma)


@dataclass(frozen=True, eq=False)
class CompatibilityResult:
    residual: float
    passed: bool
    predicted: np.ndarray


def verify_compatibility(S1: RadialShapeMatrix, Q: DistortionMatrix, S2: RadialShapeMatrix,
                         map_basis=None, tol: float = NUMERIC_TOL,
                         sigma: Optional[float] = None) -> CompatibilityResult:
    """Residual ``max |S2 - sigma (S1 + Q)|`` over matrix entries.

    ``S2`` must be expressed in the image basis; pass ``map_basis``
    (``dphi`` applied to S1's basis) to have that checked.
    """
    s1, q, s2 = S1.matrix, Q.matrix, S2.matrix
    if not (s1.shape == q.shape == s2.shape):
        raise BasisMismatch(f"matrix shapes differ: {s1.shape}, {q.shape}, {s2.shape}")
    if map_basis is not None:
        mb = np.asarray(map_basis, dtype=float)
        if mb.shape != S2.basis.shape or not np.allclose(mb, S2.basis, rtol=1e-6, atol=1e-9):
            raise BasisMismatch("S2 is not expressed in the image of S1's basis")
    sig = Q.sigma if sigma is None else float(sigma)
    predicted = sig * (s1 + q)
    residual = float(np.max(np.abs(s2 - predicted)))
    return CompatibilityResult(residual, residual < tol, predicted)


@dataclass(frozen=True, eq=False)
class CompatibilityReport:
    S1: RadialShapeMatrix
    S2: RadialShapeMatrix
    Q: DistortionMatrix
    sigma: float
    residual: float
    passed: bool
    tol: float
    image_parameter: np.ndarray


def _default_tol(*parts) -> float:
    return ANALYTIC_TOL if all(p.analytic for p in parts) else NUMERIC_TOL


def check_compatibility(patch1: MedialSheetPatch, phi: DiffeoPatch, patch2: MedialSheetPatch,
                        u, basis=None, tol: Optional[float] = None,
                        sigma_rule: str = "r/r'") -> CompatibilityReport:
    """Compute S, S', Q and sigma at ``x1(u)`` and test ``S' = sigma (S + Q)``.

    ``sigma_rule="r'/r"`` inverts the scale factor; it exists only to show
    that the other orientation fails.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    tol = _default_tol(patch1, phi, patch2) if tol is None else tol
    S1 = radial_shape_matrix(patch1, u, basis)
    sigma, u2 = scale_sigma(patch1, phi, patch2, u)
    if sigma_rule == "r'/r":
        sigma = 1.0 / sigma
    elif sigma_rule != "r/r'":
        raise ValueError(f"unknown sigma rule {sigma_rule!r}")
    Q = distortion_matrix(patch1, phi, u, S1.basis, patch2=patch2)
    image_basis = phi.d(patch1.x(u)) @ S1.basis
    S2 = radial_shape_matrix(patch2, u2, image_basis)
    res = verify_compatibility(S1, Q, S2, image_basis, tol, sigma)
    return CompatibilityReport(S1, S2, Q, sigma, res.residual, res.passed, tol, u2)


@dataclass(frozen=True, eq=False)
class RadialLineReport:
    residual: float
    passed: bool
    sigma_tilde: float
    angle: float
    S1: RadialShapeMatrix
    S2: RadialShapeMatrix
    Q: DistortionMatrix


def radial_line_variant(patch1: MedialSheetPatch, phi: DiffeoPatch, patch2: MedialSheetPatch,
                        u, basis=None, tol: Optional[float] = None,
                        angle_tol: float = 1e-6) -> RadialLineReport:
    """Compatibility when ``dphi`` only preserves radial lines.

    The image field is replaced by ``dphi(U)`` (same unit field, hence same
    shape operator) and sigma by ``|U| / |dphi(U)|``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    tol = _default_tol(patch1, phi, patch2) if tol is None else tol
    x = patch1.x(u)
    _, u2 = scale_sigma(patch1, phi, patch2, u)
    pushed = phi.d(x) @ patch1.U(u)
    target = patch2.U(u2)
    c = float(pushed @ target / (np.linalg.norm(pushed) * np.linalg.norm(target)))
    angle = math.acos(max(-1.0, min(1.0, c)))
    if angle > angle_tol:
        raise RadialLineNotPreserved(f"dphi(U) makes angle {angle:.3g} with U'")

    def pos(w):
        return phi(patch1.x(w))

    def rad(w):
        return phi.d(patch1.x(w)) @ patch1.U(w)

    pos_jac = None
    if patch1.position_jacobian is not None and phi.jacobian is not None:
        pos_jac = lambda w: phi.d(patch1.x(w)) @ patch1.dx(w)  # noqa: E731
    tilde = MedialSheetPatch(pos, rad, pos_jac, None, step=patch1.step)

    S1 = radial_shape_matrix(patch1, u, basis)
    Q = distortion_matrix(patch1, phi, u, S1.basis, image_radial=pushed)
    image_basis = phi.d(x) @ S1.basis
    S2 = radial_shape_matrix(tilde, u, image_basis)
    sigma_tilde = float(np.linalg.norm(patch1.U(u)) / np.linalg.norm(pushed))
    res = verify_compatibility(S1, Q, S2, image_basis, tol, sigma_tilde)
    return RadialLineReport(res.residual, res.passed, sigma_tilde, angle, S1, S2, Q)


# ---------------------------------------------------------------------------
# Polynomial coefficient files
# ---------------------------------------------------------------------------

def _poly_from_doc(arrays, in_dim: int, degree: int, domain, where: str) -> PolynomialMap:
    if not isinstance(arrays, list) or not arrays:
        raise SchemaError(f"{where}: expected a list of coefficient arrays")
    try:
        coeffs = [np.asarray(a, dtype=float) for a in arrays]
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: coefficients must be numeric arrays") from exc
    for c in coeffs:
        if c.shape != (degree + 1,) * in_dim:
            raise SchemaError(
                f"{where}: coefficient array shape {c.shape} != {(degree + 1,) * in_dim}")
    return PolynomialMap(coeffs, domain)


def _read_doc(document) -> dict:
    if isinstance(document, Path) or (isinstance(document, str) and not document.lstrip().startswith("{")):
        document = Path(document).read_text(encoding="utf-8")
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise SchemaError("top level must be an object")
    return document


def _header(doc: dict, kind: str, box_dim_offset: int) -> tuple:
    if doc.get("type") != kind:
        raise SchemaError(f'expected "type": "{kind}"')
    n, d = doc.get("ambient_dim"), doc.get("degree")
    if not isinstance(n, int) or n < 2 or not isinstance(d, int) or d < 0:
        raise SchemaError("ambient_dim (>= 2) and degree (>= 0) must be integers")
    domain = doc.get("domain")
    box = np.asarray(domain, dtype=float) if domain is not None else None
    if box is not None and box.shape != (n - box_dim_offset, 2):
        raise SchemaError(f"domain must list {n - box_dim_offset} [low, high] intervals")
    return n, d, box


def load_patch(document) -> MedialSheetPatch:
    """Medial sheet patch from a polynomial coefficient file (path, JSON
    text or decoded dict) of type ``polynomial_patch``."""
    doc = _read_doc(document)
    n, d, box = _header(doc, "polynomial_patch", 1)
    position = _poly_from_doc(doc.get("position"), n - 1, d, box, "position")
    radial = _poly_from_doc(doc.get("radial"), n - 1, d, box, "radial")
    if position.out_dim != n or radial.out_dim != n:
        raise SchemaError(f"position and radial need {n} components each")
    return MedialSheetPatch.from_polynomials(position, radial, box)


def load_diffeo(document) -> DiffeoPatch:
    """Diffeomorphism from a polynomial coefficient file of type
    ``polynomial_diffeo``."""
    doc = _read_doc(document)
    n, d, box = _header(doc, "polynomial_diffeo", 0)
    poly = _poly_from_doc(doc.get("components"), n, d, box, "components")
    if poly.out_dim != n:
        raise SchemaError(f"need {n} components")
    return DiffeoPatch.from_polynomial(poly)
