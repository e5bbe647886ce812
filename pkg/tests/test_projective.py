import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from medial_rigidity.errors import (
    DegenerateCrossRatio,
    DuplicatePoint,
    InvalidPencil,
    NotTransverse,
)
from medial_rigidity.projective import (
    INF,
    HyperplanePencil,
    LinePencil2D,
    ProjectiveScalar,
    cross_ratio,
    hyperplane_cross_ratio,
    line_cross_ratio,
    orbit,
    orbit_distance,
    orbit_images,
    orthogonal_complement,
    slope_of,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_cross_ratio_small_integers():
    # (1-4)(3-2) / ((1-2)(3-4)) = -3
    assert cross_ratio(1, 2, 3, 4) == -3.0
    assert cross_ratio(0, 1, INF, 3) == 3.0


@pytest.mark.parametrize("position", range(4))
def test_infinite_entry_is_the_limit_of_large_values(position):
    base = [0.3, -1.7, 2.2, 5.0]
    exact_args = list(base)
    exact_args[position] = INF
    exact = cross_ratio(*exact_args)
    for big in (1e7, -1e7):
        approx_args = list(base)
        approx_args[position] = big
        assert cross_ratio(*approx_args) == pytest.approx(exact, rel=1e-6)


def test_math_inf_is_accepted_as_projective_infinity():
    assert cross_ratio(0, 1, math.inf, 3) == cross_ratio(0, 1, INF, 3)
    assert cross_ratio(0, 1, -math.inf, 3) == cross_ratio(0, 1, INF, 3)


def test_duplicate_points_raise():
    with pytest.raises(DuplicatePoint):
        cross_ratio(1, 1, 2, 3)
    with pytest.raises(DuplicatePoint):
        cross_ratio(INF, 1, INF, 3)
    with pytest.raises(DuplicatePoint):
        cross_ratio(0.0, 1e-12, 2, 3, tol=1e-10)


def test_projective_scalar_rejects_non_finite_values():
    with pytest.raises(ValueError):
        ProjectiveScalar(math.inf)
    assert slope_of((0.0, -2.0)) == INF
    with pytest.raises(InvalidPencil):
        slope_of((0.0, 0.0))


def test_harmonic_orbit_has_three_values():
    o = orbit(-1.0)
    assert o.values == pytest.approx((-1.0, 0.5, 2.0))
    assert len(o) == 3


def test_generic_orbit_has_six_values():
    assert len(orbit(3.0)) == 6


@pytest.mark.parametrize("lam", [0.0, 1.0, 1e-13, math.inf])
def test_degenerate_orbit_raises(lam):
    with pytest.raises(DegenerateCrossRatio):
        orbit(lam)


def test_orbit_is_closed_under_generators():
    rng = np.random.default_rng(1)
    for lam in rng.uniform(-20, 20, size=200):
        if min(abs(lam), abs(lam - 1)) < 1e-3:
            continue
        o = orbit(lam)
        for v in o.values:
            assert 1.0 / v in o
            assert 1.0 - v in o


def test_orbit_images_order():
    lam = 3.0
    assert orbit_images(lam) == pytest.approx((3.0, 1 / 3, -2.0, -0.5, 2 / 3, 1.5))


def test_orbit_distance_is_a_symmetric_set_distance():
    a, b = orbit(3.0), orbit(-1.0)
    assert orbit_distance(a, a) == 0.0
    assert orbit_distance(a, orbit(1 / 3)) == pytest.approx(0.0, abs=1e-15)
    assert orbit_distance(a, b) == orbit_distance(b, a) > 0


@given(st.lists(finite, min_size=4, max_size=4, unique=True))
def test_all_permutations_land_in_the_orbit(z):
    assume(min(abs(a - b) for a, b in itertools.combinations(z, 2)) > 1e-2)
    lam = cross_ratio(*z)
    o = orbit(lam)
    for p in itertools.permutations(z):
        value = cross_ratio(*p)
        assert min(abs(value - v) for v in o.values) <= 1e-6 * max(1.0, abs(value))


def test_line_methods_agree_and_handle_vertical_lines():
    pencil = LinePencil2D(np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [-1.0, 2.0]]))
    assert line_cross_ratio(pencil, "rotate") == pytest.approx(line_cross_ratio(pencil, "slopes"))
    assert line_cross_ratio(pencil) == pytest.approx(cross_ratio(0, 1, INF, -2))


def test_line_pencil_validation():
    with pytest.raises(DuplicatePoint):
        LinePencil2D(np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(InvalidPencil):
        LinePencil2D(np.zeros((3, 2)))


angles4 = st.lists(st.floats(0, math.pi, exclude_max=True), min_size=4, max_size=4)
matrices = st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4)


@settings(max_examples=200)
@given(angles4, matrices)
def test_line_cross_ratio_is_invariant_under_linear_maps(angles, entries):
    ang = np.array(angles)
    gaps = np.abs(np.subtract.outer(ang, ang))[np.triu_indices(4, 1)]
    assume(np.min(np.minimum(gaps, math.pi - gaps)) > 0.05)
    a = np.array(entries).reshape(2, 2)
    assume(abs(np.linalg.det(a)) > 0.1 and np.linalg.cond(a) < 50)
    pencil = LinePencil2D(np.column_stack([np.cos(ang), np.sin(ang)]))
    lam = line_cross_ratio(pencil)
    lam2 = line_cross_ratio(pencil.transformed(a))
    assert lam2 == pytest.approx(lam, rel=1e-8, abs=1e-8)


def _random_pencil(rng, n):
    axis = np.linalg.qr(rng.normal(size=(n, n - 2)))[0].T
    perp = orthogonal_complement(axis, n)
    ang = np.sort(rng.uniform(0, math.pi, 4))
    while np.min(np.diff(np.append(ang, ang[0] + math.pi))) < 0.1:
        ang = np.sort(rng.uniform(0, math.pi, 4))
    normals = np.column_stack([np.cos(ang), np.sin(ang)]) @ perp
    return HyperplanePencil(n, axis, normals)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_hyperplane_cross_ratio_independent_of_transverse_plane(n):
    rng = np.random.default_rng(n)
    pencil = _random_pencil(rng, n)
    ref = hyperplane_cross_ratio(pencil)
    for _ in range(20):
        plane = rng.normal(size=(2, n))
        assert hyperplane_cross_ratio(pencil, plane) == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_hyperplane_cross_ratio_invariant_under_linear_maps():
    rng = np.random.default_rng(7)
    pencil = _random_pencil(rng, 4)
    ref = hyperplane_cross_ratio(pencil)
    for _ in range(20):
        a = rng.normal(size=(4, 4))
        if abs(np.linalg.det(a)) < 0.1:
            continue
        assert hyperplane_cross_ratio(pencil.transformed(a)) == pytest.approx(ref, rel=1e-8)


def test_plane_containing_axis_direction_is_not_transverse():
    pencil = HyperplanePencil(3, [[0.0, 0.0, 1.0]],
                              [[0, 1, 0], [-1, 1, 0], [-1, 0, 0], [-2, -1, 0]])
    with pytest.raises(NotTransverse):
        hyperplane_cross_ratio(pencil, [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    assert hyperplane_cross_ratio(pencil) == pytest.approx(-2.0)


def test_hyperplane_must_contain_axis():
    with pytest.raises(InvalidPencil):
        HyperplanePencil(3, [[0.0, 0.0, 1.0]], [[0, 1, 0.5], [-1, 1, 0], [-1, 0, 0], [-2, -1, 0]])
    with pytest.raises(DuplicatePoint):
        HyperplanePencil(3, [[0.0, 0.0, 1.0]], [[0, 1, 0], [0, 2, 0], [-1, 0, 0], [-2, -1, 0]])
