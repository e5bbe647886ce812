"""Regenerate the JSON fixtures in this directory.

Run from the repository root: ``python tests/fixtures/make_fixtures.py``.
"""
import json
import math
from pathlib import Path

import numpy as np

from medial_rigidity.branch import x_branch_config, y_branch_config
from medial_rigidity.extract import rectangle_boundary
from medial_rigidity.graph import rectangle_medial_graph, save_graph, synthetic_branch_graph

HERE = Path(__file__).parent

THETA_A = (2 * math.pi / 3, 5 * math.pi / 9, 7 * math.pi / 9)
THETA_B = (2 * math.pi / 3, 11 * math.pi / 18, 13 * math.pi / 18)


def dump(name, doc):
    (HERE / name).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def poly1(coeffs_by_power, degree):
    """Coefficient array of a univariate polynomial given {power: coeff}."""
    out = [0.0] * (degree + 1)
    for p, c in coeffs_by_power.items():
        out[p] = float(c)
    return out


def poly2(coeffs_by_power, degree):
    """Coefficient array of a bivariate polynomial given {(i, j): coeff}."""
    out = np.zeros((degree + 1, degree + 1))
    for (i, j), c in coeffs_by_power.items():
        out[i, j] = c
    return out.tolist()


def main():
    save_graph(rectangle_medial_graph(), HERE / "rectangle_graph.json")
    save_graph(synthetic_branch_graph(y_branch_config(THETA_A)), HERE / "y_branch_a.json")
    save_graph(synthetic_branch_graph(y_branch_config(THETA_B)), HERE / "y_branch_b.json")
    rotated = THETA_A[1:] + THETA_A[:1]
    save_graph(synthetic_branch_graph(y_branch_config(rotated, start=0.7)),
               HERE / "y_branch_a_rotated.json")
    quad = (5 * math.pi / 12, 7 * math.pi / 12, 7 * math.pi / 12, 5 * math.pi / 12)
    save_graph(synthetic_branch_graph(x_branch_config(quad, math.pi / 6)), HERE / "x_branch.json")
    dump("rectangle_boundary.json", {"points": rectangle_boundary(4.0, 2.0, 400).points.tolist()})

    d = 2
    # straight strip: medial axis is the x-axis, radial field (0, 1)
    dump("strip_patch.json", {
        "type": "polynomial_patch", "ambient_dim": 2, "degree": d, "domain": [[-1.0, 1.0]],
        "position": [poly1({1: 1.0}, d), poly1({}, d)],
        "radial": [poly1({}, d), poly1({0: 1.0}, d)],
    })
    # quadratic shear (x + 0.01 y^2, y)
    dump("shear_diffeo.json", {
        "type": "polynomial_diffeo", "ambient_dim": 2, "degree": d,
        "domain": [[-2.0, 2.0], [-2.0, 2.0]],
        "components": [poly2({(1, 0): 1.0, (0, 2): 0.01}, d), poly2({(0, 1): 1.0}, d)],
    })
    # parabola y = x^2 with normal radial field (-2u, 1), and its image under scaling by 2
    dump("parabola_patch.json", {
        "type": "polynomial_patch", "ambient_dim": 2, "degree": d, "domain": [[-1.0, 1.0]],
        "position": [poly1({1: 1.0}, d), poly1({2: 1.0}, d)],
        "radial": [poly1({1: -2.0}, d), poly1({0: 1.0}, d)],
    })
    dump("parabola_scaled_patch.json", {
        "type": "polynomial_patch", "ambient_dim": 2, "degree": d, "domain": [[-1.0, 1.0]],
        "position": [poly1({1: 2.0}, d), poly1({2: 2.0}, d)],
        "radial": [poly1({1: -4.0}, d), poly1({0: 2.0}, d)],
    })
    dump("scale2_diffeo.json", {
        "type": "polynomial_diffeo", "ambient_dim": 2, "degree": 1,
        "domain": [[-4.0, 4.0], [-4.0, 4.0]],
        "components": [[[0.0, 0.0], [2.0, 0.0]], [[0.0, 2.0], [0.0, 0.0]]],
    })
    dump("line_pencil.json", {"directions": [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [-1.0, 2.0]]})
    dump("hyperplane_pencil.json", {
        "ambient_dim": 3, "axis": [[0.0, 0.0, 1.0]],
        "normals": [[0.0, 1.0, 0.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [-2.0, -1.0, 0.0]],
    })
    dump("cross_directions.json", {"directions": [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]})


if __name__ == "__main__":
    main()
