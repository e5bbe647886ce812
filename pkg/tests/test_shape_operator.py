import math

import numpy as np
import pytest

from medial_rigidity.errors import (
    BasisMismatch,
    NotInvertible,
    PointNotOnTarget,
    ProjectionSingular,
    RadialLineNotPreserved,
    SchemaError,
)
from medial_rigidity.shape_operator import (
    DiffeoPatch,
    MedialSheetPatch,
    PolynomialMap,
    RadialShapeMatrix,
    affine_diffeo,
    central_hessian,
    check_compatibility,
    circle_sheet,
    distortion_matrix,
    identity_diffeo,
    line_sheet,
    load_diffeo,
    load_patch,
    numeric_copy,
    radial_line_variant,
    radial_shape_matrix,
    scale_sigma,
    verify_compatibility,
)


def cylinder_sheet(radius, radial_length):
    def pos(u):
        return np.array([radius * math.cos(u[0]), radius * math.sin(u[0]), u[1]])

    def rad(u):
        return radial_length * np.array([math.cos(u[0]), math.sin(u[0]), 0.0])

    return MedialSheetPatch(pos, rad)


def sphere_sheet(radius, radial_length):
    def unit(u):
        return np.array([math.cos(u[0]) * math.cos(u[1]), math.sin(u[0]) * math.cos(u[1]), math.sin(u[1])])

    return MedialSheetPatch(lambda u: radius * unit(u), lambda u: radial_length * unit(u))


def radial_power_map(dim):
    """phi(x) = g(|x|) x/|x| with g(rho) = rho^2 / 2 in the first two coordinates."""

    def phi(x):
        x = np.asarray(x, dtype=float)
        rho = math.hypot(x[0], x[1])
        out = x.copy()
        out[:2] = 0.5 * rho * x[:2]
        return out

    return DiffeoPatch(phi)


# --- radial shape operator ---------------------------------------------------

def test_strip_has_zero_shape_operator():
    assert radial_shape_matrix(line_sheet(1.0), [0.3]).matrix == pytest.approx(np.array([[0.0]]))


@pytest.mark.parametrize("analytic", [True, False])
def test_annulus_arc_length_basis(analytic):
    patch = circle_sheet(2.0, 0.7)
    if not analytic:
        patch = numeric_copy(patch)
    u = [0.4]
    arc = patch.dx(u) / 2.0
    s = radial_shape_matrix(patch, u, arc).matrix
    assert s == pytest.approx(np.array([[-0.5]]), abs=1e-9 if analytic else 1e-8)


def test_inward_field_flips_sign():
    s = radial_shape_matrix(circle_sheet(2.0, 0.7, outward=False), [0.4]).matrix
    assert s == pytest.approx(np.array([[0.5]]))


def test_cylinder_and_sphere():
    cyl = radial_shape_matrix(cylinder_sheet(3.0, 1.0), [0.2, 0.5]).matrix
    assert cyl == pytest.approx(np.array([[-1 / 3, 0.0], [0.0, 0.0]]), abs=1e-8)
    sph = radial_shape_matrix(sphere_sheet(2.0, 0.5), [0.2, 0.3]).matrix
    assert sph == pytest.approx(-0.5 * np.eye(2), abs=1e-8)


def test_basis_change_conjugates():
    patch = cylinder_sheet(3.0, 1.0)
    u = [0.2, 0.5]
    base = radial_shape_matrix(patch, u)
    a = np.array([[1.0, 0.4], [-0.3, 2.0]])
    changed = radial_shape_matrix(patch, u, base.basis @ a)
    assert changed.matrix == pytest.approx(np.linalg.inv(a) @ base.matrix @ a, abs=1e-8)


def test_radial_field_in_tangent_space_is_singular():
    bad = MedialSheetPatch(lambda u: np.array([u[0], 0.0]), lambda u: np.array([1.0, 0.0]))
    with pytest.raises(ProjectionSingular):
        radial_shape_matrix(bad, [0.0])


def test_non_tangent_basis_is_rejected():
    with pytest.raises(BasisMismatch):
        radial_shape_matrix(circle_sheet(2.0, 1.0), [0.0], np.array([[1.0], [0.0]]))


def test_oblique_radial_field_uses_projection_along_it():
    # straight line with a rotating oblique field U = (cos(u), 1): d U1 has a
    # component along U that the projection must remove
    patch = MedialSheetPatch(lambda u: np.array([u[0], 0.0]),
                             lambda u: np.array([math.cos(u[0]), 1.0]))
    u = 0.3
    c, s = math.cos(u), math.sin(u)
    n = math.hypot(c, 1.0)
    dU1 = np.array([-s, 0.0]) / n - np.array([c, 1.0]) * (-c * s) / n**3
    # solve dU1 = a e1 + b U for a
    a = np.linalg.solve(np.column_stack([[1.0, 0.0], [c, 1.0]]), dU1)[0]
    assert radial_shape_matrix(patch, [u]).matrix == pytest.approx(np.array([[-a]]), abs=1e-9)


# --- scale and distortion ----------------------------------------------------

def test_scale_sigma_cases():
    ann = circle_sheet(2.0, 0.7)
    assert scale_sigma(ann, identity_diffeo(2), ann, [0.3])[0] == pytest.approx(1.0)
    assert scale_sigma(ann, affine_diffeo(2 * np.eye(2)), circle_sheet(4.0, 1.4), [0.3])[0] == pytest.approx(0.5)
    c, s = math.cos(0.8), math.sin(0.8)
    rigid = affine_diffeo([[c, -s], [s, c]], [1.0, -2.0])
    moved = circle_sheet(2.0, 0.7, center=(1.0, -2.0))
    sigma, u2 = scale_sigma(ann, rigid, moved, [0.3])
    assert sigma == pytest.approx(1.0)
    assert u2[0] == pytest.approx(1.1)


def test_image_off_target_raises():
    with pytest.raises(PointNotOnTarget):
        scale_sigma(circle_sheet(2.0, 0.7), identity_diffeo(2), circle_sheet(2.5, 0.7), [0.3])


def test_affine_maps_have_no_distortion():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(2, 2)) + 2 * np.eye(2)
    q = distortion_matrix(circle_sheet(2.0, 0.7), affine_diffeo(a, [0.3, 0.1]), [0.5])
    assert q.matrix == pytest.approx(np.array([[0.0]]), abs=1e-15)


def test_singular_map_is_rejected():
    with pytest.raises(NotInvertible):
        distortion_matrix(line_sheet(1.0), affine_diffeo([[1.0, 0.0], [0.0, 0.0]]), [0.0])


def test_shear_distortion_matches_dense_hessian_oracle():
    eps = 0.01
    phi_analytic = DiffeoPatch(
        lambda x: np.array([x[0] + eps * x[1] ** 2, x[1]]),
        lambda x: np.array([[1.0, 2 * eps * x[1]], [0.0, 1.0]]),
        lambda x: np.array([[[0.0, 0.0], [0.0, 2 * eps]], [[0.0, 0.0], [0.0, 0.0]]]),
    )
    phi_numeric = DiffeoPatch(phi_analytic.map)
    # tilted strip so that U1 has components along both axes
    patch = MedialSheetPatch(lambda u: np.array([u[0], 0.5 * u[0]]), lambda u: np.array([-0.5, 1.0]))
    qa = distortion_matrix(patch, phi_analytic, [0.4]).matrix
    qn = distortion_matrix(patch, phi_numeric, [0.4]).matrix
    assert qn == pytest.approx(qa, abs=1e-6)
    assert abs(qa[0, 0]) > 1e-4


def test_radial_power_map_distortion_closed_form():
    # g = rho^2/2 at R = 2: Q = 1/R - g'/g = -1/2, sigma = 1/g' = 1/2
    ann = numeric_copy(circle_sheet(2.0, 0.7))
    target = numeric_copy(circle_sheet(2.0, 1.4))
    q = distortion_matrix(ann, radial_power_map(2), [0.3], patch2=target)
    assert q.matrix == pytest.approx(np.array([[-0.5]]), abs=1e-6)
    assert q.sigma == pytest.approx(0.5)


# --- compatibility -----------------------------------------------------------

def test_identity_residual():
    ann = circle_sheet(2.0, 0.7)
    rep = check_compatibility(ann, identity_diffeo(2), ann, [0.3])
    assert rep.residual < 1e-12 and rep.passed and rep.tol == 1e-9


def test_uniform_scaling():
    rep = check_compatibility(circle_sheet(2.0, 0.7), affine_diffeo(2 * np.eye(2)),
                              circle_sheet(4.0, 1.4), [0.3])
    assert rep.sigma == pytest.approx(0.5)
    assert rep.Q.matrix == pytest.approx(np.array([[0.0]]), abs=1e-15)
    assert rep.residual < 1e-9


def test_sigma_orientation_tripwire():
    args = (circle_sheet(2.0, 0.7), affine_diffeo(2 * np.eye(2)), circle_sheet(4.0, 1.4), [0.3])
    right = check_compatibility(*args)
    wrong = check_compatibility(*args, sigma_rule="r'/r")
    assert not wrong.passed
    assert wrong.sigma / right.sigma == pytest.approx(4.0)
    # S' = S/2 but the inverted rule predicts 2 S
    assert wrong.residual == pytest.approx(abs(2 * right.S1.matrix[0, 0] - right.S2.matrix[0, 0]))


def test_shear_numeric_pipeline():
    strip = numeric_copy(line_sheet(1.0))
    shear = DiffeoPatch(lambda x: np.array([x[0] + 0.01 * x[1] ** 2, x[1]]))
    rep = check_compatibility(strip, shear, strip, [0.4])
    assert rep.tol == 1e-4 and rep.passed


def test_radial_power_map_compatibility():
    ann = numeric_copy(circle_sheet(2.0, 0.7))
    rep = check_compatibility(ann, radial_power_map(2), numeric_copy(circle_sheet(2.0, 1.4)), [0.3])
    assert rep.S2.matrix == pytest.approx(np.array([[-0.5]]), abs=1e-6)
    assert rep.passed


def test_similarity_family_on_annulus():
    rng = np.random.default_rng(4)
    ann = circle_sheet(2.0, 0.7)
    for _ in range(20):
        k = rng.uniform(0.3, 3.0)
        ang = rng.uniform(0, 2 * math.pi)
        rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
        if rng.uniform() < 0.5:
            rot = rot @ np.diag([1.0, -1.0])
        b = rng.normal(size=2)
        phi = affine_diffeo(k * rot, b)
        image = MedialSheetPatch(lambda u, phi=phi: phi(ann.x(u)),
                                 lambda u, k=k, rot=rot: k * rot @ ann.U(u))
        rep = check_compatibility(ann, phi, image, [rng.uniform(0, 2 * math.pi)], tol=1e-6)
        assert rep.Q.matrix == pytest.approx(np.array([[0.0]]), abs=1e-15)
        assert rep.sigma == pytest.approx(1 / k)
        assert rep.passed


def test_residual_is_basis_covariant():
    cyl = cylinder_sheet(2.0, 0.7)
    phi = radial_power_map(3)
    target = cylinder_sheet(2.0, 1.4)
    u = [0.3, 0.1]
    base = check_compatibility(cyl, phi, target, u)
    a = np.array([[1.0, 0.5], [0.2, 1.5]])
    changed = check_compatibility(cyl, phi, target, u, base.S1.basis @ a)
    assert changed.passed and base.passed
    # both sides conjugate by the same matrix
    assert changed.S2.matrix == pytest.approx(np.linalg.inv(a) @ base.S2.matrix @ a, abs=1e-6)


def test_verify_rejects_mismatched_bases():
    s1 = RadialShapeMatrix(np.eye(2)[:, :1], np.zeros((1, 1)))
    q = distortion_matrix(line_sheet(1.0), identity_diffeo(2), [0.0])
    with pytest.raises(BasisMismatch):
        verify_compatibility(s1, q, RadialShapeMatrix(np.eye(3)[:, :2], np.zeros((2, 2))))
    with pytest.raises(BasisMismatch):
        verify_compatibility(s1, q, s1, map_basis=np.array([[2.0], [0.0]]))


# --- radial-line variant -----------------------------------------------------

def test_radial_line_variant_identity_matches_plain_check():
    ann = circle_sheet(2.0, 0.7)
    plain = check_compatibility(ann, identity_diffeo(2), ann, [0.3])
    variant = radial_line_variant(ann, identity_diffeo(2), ann, [0.3])
    assert variant.sigma_tilde == pytest.approx(plain.sigma)
    assert variant.residual == pytest.approx(plain.residual, abs=1e-9)


def test_radial_line_variant_with_stretched_radial_vectors():
    # target radial vectors have an unrelated length; only the line matters
    rep = radial_line_variant(circle_sheet(2.0, 0.7), affine_diffeo(2 * np.eye(2)),
                              circle_sheet(4.0, 0.3), [0.3])
    assert rep.sigma_tilde == pytest.approx(0.5)
    assert rep.passed


def test_radial_line_must_be_preserved():
    strip = line_sheet(1.0)
    turn = affine_diffeo([[1.0, math.tan(0.1)], [0.0, 1.0]])
    with pytest.raises(RadialLineNotPreserved):
        radial_line_variant(strip, turn, strip, [0.2])


# --- polynomial files ----------------------------------------------------------

def test_polynomial_derivatives_converge_quadratically():
    poly = PolynomialMap([[[0.0, 1.0, 0.5], [2.0, 0.0, 0.0], [0.0, -1.0, 0.0]],
                          [[1.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 0.7]]])
    x = np.array([0.3, -0.4])
    exact = poly.hessian(x)
    errs = [np.max(np.abs(central_hessian(poly, x, h) - exact)) for h in (1e-2, 5e-3)]
    # quadratic (and lower) polynomials are differentiated exactly by the stencil
    assert max(errs) < 1e-8
    cubic = PolynomialMap([[0.0, 0.0, 0.0, 1.0]])
    x = np.array([0.7])
    errs = []
    for h in (1e-2, 5e-3):
        fd = (cubic(x + h) - cubic(x - h)) / (2 * h)
        errs.append(abs(fd[0] - cubic.jacobian(x)[0, 0]))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=1e-3)


def test_load_fixture_patches(fixtures_dir):
    p1 = load_patch(fixtures_dir / "parabola_patch.json")
    p2 = load_patch(fixtures_dir / "parabola_scaled_patch.json")
    phi = load_diffeo(fixtures_dir / "scale2_diffeo.json")
    assert p1.analytic and phi.analytic
    rep = check_compatibility(p1, phi, p2, [0.3])
    assert rep.tol == 1e-9 and rep.passed
    assert rep.S2.matrix == pytest.approx(0.5 * rep.S1.matrix)
    num = check_compatibility(numeric_copy(p1), DiffeoPatch(phi.map), numeric_copy(p2), [0.3])
    assert num.S1.matrix == pytest.approx(rep.S1.matrix, abs=1e-8)


def test_patch_schema_errors(fixtures_dir):
    with pytest.raises(SchemaError):
        load_patch({"type": "polynomial_patch", "ambient_dim": 2, "degree": 2,
                    "position": [[0, 1], [0, 0]], "radial": [[0, 0, 0], [1, 0, 0]]})
    with pytest.raises(SchemaError):
        load_diffeo(fixtures_dir / "strip_patch.json")
