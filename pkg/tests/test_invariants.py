import math

import numpy as np
import pytest

from conftest import THETA_A, THETA_B, random_triples
from medial_rigidity.branch import AngleTriple, lift_config, y_branch_config
from medial_rigidity.errors import DegenerateTriple, ExcludedLocus, PinnedDegenerate
from medial_rigidity.invariants import (
    ROW_SECTORS,
    collision_scan,
    compare_four_sheet,
    compare_y_branch,
    example_distortion_configs,
    finite_difference_jacobian,
    four_subset_invariants,
    linear_distortion_analysis,
    local_uniqueness_probe,
    log_triple,
    radial_pencil_slopes,
    rank_grid,
    slope_triple_map,
    triple_cross_ratio,
    triple_from_config,
    triple_from_stratum,
    triple_map_jacobian,
)
from medial_rigidity.projective import HyperplanePencil, cross_ratio, orbit_distance

# published table for theta = (2pi/3, 5pi/9, 7pi/9)
TABLE_SLOPES = (
    (0.0, 5.671281833, -1.732050808, -0.8390996312),
    (0.0, 0.8390996312, -5.671281833, -1.732050808),
    (0.0, 1.732050808, -0.8390996312, -5.671281833),
)
TABLE_LAMBDAS = (-1.226681596, -3.411474126, 1.742227197)
TABLE_ORBITS = (
    (-1.226681596, -0.8152074697, 2.226681596, 0.4490987853, 1.815207470, 0.5509012147),
    (-3.411474126, -0.2931284140, 4.411474126, 0.2266815970, 1.293128414, 0.7733184030),
    (1.742227197, 0.5739779529, -0.742227197, -1.347296359, 0.4260220471, 2.347296359),
)


def test_slope_rows_match_table():
    for row, sector in enumerate(ROW_SECTORS):
        slopes = [s.value for s in radial_pencil_slopes(THETA_A, sector)]
        # the table rounds tan(80 deg) to 5.671281833 (true 5.6712818196)
        assert slopes == pytest.approx(TABLE_SLOPES[row], rel=1e-8, abs=1e-12)


def test_triple_matches_table():
    tri = triple_cross_ratio(THETA_A)
    for lam, ref in zip(tri.lambdas, TABLE_LAMBDAS):
        assert abs(lam - ref) < 1e-8
    for orb, ref in zip(tri.orbits, TABLE_ORBITS):
        assert len(orb) == 6
        for v in ref:
            assert min(abs(v - w) for w in orb.values) < 1e-8


def test_by_sector_reorders_rows():
    tri = triple_cross_ratio(THETA_A)
    by = tri.by_sector
    for row, sector in enumerate(ROW_SECTORS):
        assert by[sector - 1] == tri.lambdas[row]


def test_slope_map_matches_direct_cross_ratios():
    b = tuple(math.tan(t) for t in THETA_A)
    direct = slope_triple_map(b)
    assert direct[0] == pytest.approx(cross_ratio(0.0, -b[0], b[2], b[1]))
    assert triple_cross_ratio(THETA_A).by_sector == pytest.approx(direct, rel=1e-12)


def test_right_angle_uses_point_at_infinity():
    theta = (math.pi / 2, 3 * math.pi / 4 - 0.1, 3 * math.pi / 4 + 0.1)
    tri = triple_cross_ratio(theta)
    near = (math.pi / 2 + 1e-7, 3 * math.pi / 4 - 0.1 - 0.5e-7, 3 * math.pi / 4 + 0.1 - 0.5e-7)
    assert tri.lambdas == pytest.approx(triple_cross_ratio(near).lambdas, rel=1e-5)


def test_equal_angles_are_degenerate():
    with pytest.raises(DegenerateTriple):
        triple_cross_ratio((2 * math.pi / 3,) * 3)


def test_geometric_route_matches_slope_formula():
    for theta in random_triples(np.random.default_rng(11), 100, margin=0.05):
        theta = AngleTriple.from_approximate(theta, 1e-12)
        try:
            formula = triple_cross_ratio(theta)
        except DegenerateTriple:
            continue
        geometric = triple_from_config(y_branch_config(theta, start=1.3))
        assert geometric.lambdas == pytest.approx(formula.lambdas, rel=1e-9, abs=1e-9)


def test_triple_invariant_under_orientation_preserving_linear_maps():
    cfg = y_branch_config(THETA_A, start=0.2)
    ref = triple_from_config(cfg)
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = rng.normal(size=(2, 2))
        if np.linalg.det(a) < 0.2:
            continue
        img = triple_from_config(cfg.transformed(a)).orbits_by_sector
        # the image may start its sector labels at a different branch
        best = min(
            max(orbit_distance(ref.orbits_by_sector[s], img[(s + k) % 3]) for s in range(3))
            for k in range(3))
        assert best < 1e-8


@pytest.mark.parametrize("n", [3, 4, 5])
def test_stratum_route_matches_planar(n):
    rng = np.random.default_rng(n)
    q = np.linalg.qr(rng.normal(size=(n, n)))[0]
    if np.linalg.det(q) < 0:
        q[:, -1] *= -1
    data = lift_config(y_branch_config(THETA_A), q[:, : n - 2].T, q[:, n - 2:].T)
    tri = triple_from_stratum(data)
    assert tri.lambdas == pytest.approx(triple_cross_ratio(THETA_A).lambdas, rel=1e-9)


def test_opposite_plane_orientation_gives_mirror_image_with_same_orbits():
    q = np.eye(3)
    q[:, -1] *= -1
    data = lift_config(y_branch_config(THETA_A), q[:, :1].T, q[:, 1:].T)
    mirrored = triple_from_stratum(data)
    ref = triple_cross_ratio(THETA_A)
    assert mirrored.lambdas != pytest.approx(ref.lambdas)
    assert sorted(v for o in mirrored.orbits for v in o.values) == pytest.approx(
        sorted(v for o in ref.orbits for v in o.values), rel=1e-9)


def test_compare_detects_obstruction_and_cyclic_match():
    res = compare_y_branch(THETA_A, THETA_B)
    assert not res.matched and res.obstruction > 0.1
    rotated = THETA_A[1:] + THETA_A[:1]
    res = compare_y_branch(THETA_A, rotated)
    assert res.matched and res.obstruction < 1e-12


def test_reversed_order_needs_reflections():
    reversed_ = THETA_A[::-1]
    assert not compare_y_branch(THETA_A, reversed_).matched
    assert compare_y_branch(THETA_A, reversed_, reflections=True).matched


def _pencil(angles):
    normals = [[-math.sin(a), math.cos(a), 0.0] for a in angles]
    return HyperplanePencil(3, [[0.0, 0.0, 1.0]], normals)


def test_four_sheet_comparison():
    a = _pencil([0.0, 0.5, 1.3, 2.0])
    b = _pencil([0.0, 0.6, 1.3, 2.0])
    assert compare_four_sheet(a, b).obstructed
    m = np.array([[2.0, 0.5, 0.0], [0.3, 1.0, 0.0], [0.1, 0.2, 1.0]])
    same = compare_four_sheet(a, a.transformed(m))
    assert not same.obstructed
    assert "no obstruction" in same.message


def test_four_subset_invariants_enumerates_subsets():
    normals = [[-math.sin(a), math.cos(a), 0.0] for a in (0.0, 0.4, 1.0, 1.9, 2.5)]
    inv = four_subset_invariants(3, [[0.0, 0.0, 1.0]], normals)
    assert len(inv) == 5
    assert all(len(v.orbit) in (3, 6) for v in inv.values())


def test_example_distortion_with_pinned_axis_and_upper_branch():
    alpha = math.pi / 3
    source, target = example_distortion_configs(alpha)
    rep = linear_distortion_analysis(source, target, (0, 1))
    assert rep.indices == (2, 3)
    # -x stays on the axis; -y goes to the ray at pi + alpha
    assert rep.angle_errors[0] == pytest.approx(0.0, abs=1e-12)
    assert rep.image_tangents[1] / np.linalg.norm(rep.image_tangents[1]) == pytest.approx(
        [math.cos(math.pi + alpha), math.sin(math.pi + alpha)])
    # the ray at -alpha is then pi - 2 alpha away
    assert rep.angle_errors[1] == pytest.approx(math.pi - 2 * alpha, abs=1e-12)


def test_antipodal_pins_are_degenerate():
    source, target = example_distortion_configs(math.pi / 3)
    with pytest.raises(PinnedDegenerate):
        linear_distortion_analysis(source, target, (0, 2))


def test_three_pins_send_fourth_line_home_iff_cross_ratio_agrees():
    rng = np.random.default_rng(2)
    src = np.array([[1.0, 0.0], [0.3, 1.0], [-1.0, 0.8], [-0.2, -1.0]])
    a = rng.normal(size=(2, 2))
    tgt = src @ a.T
    rep = linear_distortion_analysis(src, tgt, (0, 1, 2))
    assert rep.line_errors[0] == pytest.approx(0.0, abs=1e-9)
    tgt[3] = [0.5, -1.0]
    assert linear_distortion_analysis(src, tgt, (0, 1, 2)).line_errors[0] > 1e-3


def test_rank_at_table_point():
    cert = triple_map_jacobian(THETA_A)
    assert cert.rank2
    assert cert.singular_values[0] == pytest.approx(10.48, abs=0.01)
    assert cert.singular_values[1] == pytest.approx(4.00, abs=0.01)


def test_three_point_jacobian_agrees_with_five_point_reference():
    p = THETA_A[:2]
    coarse = finite_difference_jacobian(log_triple, p, 1e-3, stencil=5)
    fine = triple_map_jacobian(THETA_A).jacobian
    assert np.max(np.abs(coarse - fine)) < 1e-6 * np.max(np.abs(fine))


@pytest.mark.parametrize("theta", [
    (math.pi / 2, 3 * math.pi / 4 - 0.1, 3 * math.pi / 4 + 0.1),
    (2.0, 2.0, 2 * math.pi - 4.0),
])
def test_excluded_locus(theta):
    with pytest.raises(ExcludedLocus):
        triple_map_jacobian(theta)


def test_local_uniqueness_probe():
    res = local_uniqueness_probe(THETA_A, 0.05, 200)
    assert res.injective and res.samples_used == 200
    assert res.min_separation > 0
    assert local_uniqueness_probe(THETA_A, 0.0, 10).samples_used == 0


def test_rank_grid_is_ordered_and_skips_excluded_points():
    certs = rank_grid(6)
    assert len(certs) == 10
    firsts = [c.theta.theta[:2] for c in certs]
    assert firsts == sorted(firsts)
    assert all(c.rank2 for c in certs)


def test_collision_scan_reports_closest_pair():
    res = collision_scan(300, min_angle_distance=0.2)
    assert res.samples == 300
    assert res.angle_distance >= 0.2
    assert res.value_distance > 0
