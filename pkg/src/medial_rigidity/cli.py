"""Command-line interface.

Exit codes: 0 success (no obstruction), 2 obstruction or incompatibility
found, 1 error. ``--format machine`` prints ``key=value`` lines in a fixed
order with floats in round-trip ``repr`` form.
"""
from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import sys
from pathlib import Path

import numpy as np

from . import branch, extract, graph, invariants, projective, shape_operator, svg
from .errors import MedialError, SchemaError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_OBSTRUCTION = 2

_NAMES = {"pi": math.pi, "tau": math.tau, "e": math.e, "inf": math.inf}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text: str) -> float:
    """Evaluate a numeric literal or simple arithmetic in ``pi`` (e.g.
    ``5*pi/9``). Only numbers, the names pi/tau/e/inf and + - * / ** are
    accepted."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id.lower() in _NAMES:
            return _NAMES[node.id.lower()]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ValueError(f"not a number: {text!r}")

    try:
        return float(ev(ast.parse(text.strip().replace("π", "pi"), mode="eval")))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def _number(text: str) -> float:
    try:
        return parse_number(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _machine(value) -> str:
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        if value and isinstance(value[0], (list, tuple)):
            return ";".join(_machine(v) for v in value)
        return ",".join(_machine(v) for v in value)
    return str(value)


def _human(value, angle: bool) -> str:
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "yes" if value else "no"
    if isinstance(value, (float, np.floating)):
        s = f"{float(value):.10g}"
        return f"{s} rad ({math.degrees(value):.6g} deg)" if angle else s
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        if value and isinstance(value[0], (list, tuple)):
            return "[" + "; ".join(_human(v, angle) for v in value) + "]"
        return "(" + ", ".join(_human(v, angle) for v in value) + ")"
    return str(value)


class Report:
    def __init__(self):
        self.items = []

    def add(self, key: str, value, angle: bool = False):
        self.items.append((key, value, angle))

    def render(self, fmt: str) -> str:
        if fmt == "machine":
            return "".join(f"{k}={_machine(v)}\n" for k, v, _ in self.items)
        width = max((len(k) for k, _, _ in self.items), default=0)
        return "".join(f"{k.ljust(width)} : {_human(v, a)}\n" for k, v, a in self.items)


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------

def _triple(values, sum_tol: float = 1e-6) -> branch.AngleTriple:
    return branch.AngleTriple.from_approximate(values, sum_tol)


def _load_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be an object")
    return doc


def _single_branch(g: graph.MedialGraph, vertex_id):
    if vertex_id is not None:
        for v in g.vertices:
            if str(v.id) == str(vertex_id):
                return v.id
        raise SchemaError(f"no vertex {vertex_id!r}")
    ids = g.branch_vertices()
    if len(ids) != 1:
        raise SchemaError(f"graph has {len(ids)} branch vertices; choose one with --vertex")
    return ids[0]


def config_from_source(source: str, vertex_id=None, k: int = extract.TANGENT_WINDOW):
    """Branch configuration or angle triple named by a CLI argument.

    ``source`` is a medial graph file, a JSON file with ``theta`` (and
    optional ``t``) or ``tangents``/``radials``, or comma-separated angles.
    Returns ``(AngleTriple or AngleQuad, BranchConfig2D or None)``.
    """
    path = Path(source)
    if not path.exists():
        angles = [parse_number(x) for x in source.split(",")]
        if len(angles) == 3:
            return _triple(angles), None
        raise SchemaError(f"{source!r} is neither a file nor three comma-separated angles")
    doc = _load_json(path)
    if "vertices" in doc:
        g = graph.parse_medial_graph(doc)
        config = extract.branch_config_from_graph(g, _single_branch(g, vertex_id), k)
    elif "theta" in doc:
        theta = [float(x) for x in doc["theta"]]
        if len(theta) == 3:
            return _triple(theta), branch.y_branch_config(_triple(theta))
        if len(theta) == 4:
            t = float(doc.get("t", 0.25 * min(theta)))
            quad = branch.AngleQuad.from_approximate(theta)
            return quad, branch.x_branch_config(quad, t)
        raise SchemaError("theta must list 3 or 4 angles")
    elif "tangents" in doc and "radials" in doc:
        config = branch.BranchConfig2D.from_directions(doc["tangents"], doc["radials"])
    else:
        raise SchemaError(f"{source}: expected a medial graph, theta, or tangents/radials")
    return (config.angle_triple() if config.k == 3 else config.angle_quad()), config


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_cross_ratio(args, rep: Report) -> int:
    if args.pencil:
        doc = _load_json(args.pencil)
        if "directions" in doc:
            pencil = projective.LinePencil2D(np.asarray(doc["directions"], dtype=float))
            lam = projective.line_cross_ratio(pencil)
        else:
            pencil = projective.HyperplanePencil(doc["ambient_dim"], doc.get("axis", []),
                                                 doc["normals"])
            lam = projective.hyperplane_cross_ratio(pencil)
    else:
        if len(args.values) != 4:
            raise SchemaError("give exactly 4 values (or --pencil FILE)")
        vals = [projective.INF if math.isinf(v) else v for v in args.values]
        if args.slopes:
            lam = projective.line_cross_ratio(projective.LinePencil2D.from_slopes(vals))
        else:
            lam = projective.cross_ratio(*vals)
    rep.add("cross_ratio", lam)
    rep.add("orbit", projective.orbit(lam).values)
    return EXIT_OK


def cmd_orbit(args, rep: Report) -> int:
    orb = projective.orbit(args.value, args.tol)
    rep.add("lambda", orb.representative)
    rep.add("size", len(orb))
    rep.add("orbit", orb.values)
    return EXIT_OK


def cmd_y_angles(args, rep: Report) -> int:
    theta = _triple(args.theta)
    alpha = branch.solve_y_branch_angles(theta)
    rep.add("theta", theta.theta, angle=True)
    rep.add("alpha", alpha, angle=True)
    return EXIT_OK


def cmd_x_check(args, rep: Report) -> int:
    quad = branch.AngleQuad.from_approximate(args.theta)
    res = branch.check_x_branch_compatibility(quad, args.tol)
    rep.add("theta", quad.theta, angle=True)
    rep.add("residual", res.residual)
    rep.add("compatible", res.compatible)
    if not res.compatible:
        return EXIT_OBSTRUCTION
    if args.t is not None:
        fam = branch.x_branch_beta_family(quad, args.t, args.tol)
        rep.add("t", fam.t, angle=True)
        rep.add("beta", fam.beta, angle=True)
        rep.add("admissible", fam.admissible)
    return EXIT_OK


def cmd_triple(args, rep: Report) -> int:
    theta = _triple(args.theta)
    tri = invariants.triple_cross_ratio(theta)
    rep.add("theta", theta.theta, angle=True)
    for i, (lam, orb) in enumerate(zip(tri.lambdas, tri.orbits), start=1):
        rep.add(f"lambda{i}", lam)
    for i, orb in enumerate(tri.orbits, start=1):
        rep.add(f"orbit{i}", orb.values)
    return EXIT_OK


def cmd_compare(args, rep: Report) -> int:
    ta, _ = config_from_source(args.a, args.vertex_a)
    tb, _ = config_from_source(args.b, args.vertex_b)
    if not (isinstance(ta, branch.AngleTriple) and isinstance(tb, branch.AngleTriple)):
        raise SchemaError("compare needs two Y-branch (three-sheet) configurations")
    cmp_ = invariants.compare_y_branch(ta, tb, args.tol, args.reflections)
    rep.add("theta_a", ta.theta, angle=True)
    rep.add("theta_b", tb.theta, angle=True)
    rep.add("lambda_a", cmp_.triple_a.lambdas)
    rep.add("lambda_b", cmp_.triple_b.lambdas)
    rep.add("relabeling", cmp_.relabeling)
    rep.add("distances", cmp_.distances)
    rep.add("obstruction", cmp_.obstruction)
    rep.add("matched", cmp_.matched)
    return EXIT_OK if cmp_.matched else EXIT_OBSTRUCTION


def _rank_line(cert) -> tuple:
    return cert.theta.theta + cert.singular_values + (cert.rank2,)


def cmd_rank(args, rep: Report) -> int:
    if args.scan is not None:
        certs = invariants.rank_grid(args.scan, args.step)
        rep.add("points", len(certs))
        rep.add("rank2_count", sum(c.rank2 for c in certs))
        for i, c in enumerate(certs):
            rep.add(f"point{i}", _rank_line(c))
        return EXIT_OK
    if args.theta is None or len(args.theta) != 3:
        raise SchemaError("give three angles or --scan N")
    cert = invariants.triple_map_jacobian(_triple(args.theta), args.step)
    rep.add("theta", cert.theta.theta, angle=True)
    rep.add("step", cert.step)
    rep.add("jacobian", cert.jacobian)
    rep.add("singular_values", cert.singular_values)
    rep.add("ratio", cert.singular_values[1] / cert.singular_values[0])
    rep.add("rank2", cert.rank2)
    if args.probe:
        probe = invariants.local_uniqueness_probe(cert.theta, args.radius, args.samples)
        rep.add("probe_injective", probe.injective)
        rep.add("probe_min_separation", probe.min_separation)
        rep.add("probe_samples", probe.samples_used)
    return EXIT_OK


def _directions_file(path) -> np.ndarray:
    doc = _load_json(path)
    if "directions" not in doc:
        raise SchemaError(f"{path}: expected a 'directions' list")
    return np.asarray(doc["directions"], dtype=float)


def cmd_distort(args, rep: Report) -> int:
    if args.source or args.target:
        if not (args.source and args.target):
            raise SchemaError("--source and --target go together")
        source, target = _directions_file(args.source), _directions_file(args.target)
    else:
        source, target = invariants.example_distortion_configs(args.alpha)
        rep.add("alpha", args.alpha, angle=True)
    pinned = tuple(int(x) for x in args.pinned.split(","))
    res = invariants.linear_distortion_analysis(source, target, pinned)
    rep.add("pinned", pinned)
    rep.add("matrix", res.matrix)
    rep.add("free_indices", res.indices)
    rep.add("image_directions", res.image_tangents)
    rep.add("angle_errors", res.angle_errors, angle=True)
    rep.add("line_errors", res.line_errors, angle=True)
    worst = max(res.angle_errors, default=0.0)
    rep.add("obstructed", worst > args.tol)
    return EXIT_OBSTRUCTION if worst > args.tol else EXIT_OK


def cmd_shape_check(args, rep: Report) -> int:
    p1 = shape_operator.load_patch(args.patch1)
    p2 = shape_operator.load_patch(args.patch2)
    phi = shape_operator.load_diffeo(args.diffeo)
    if args.numeric:
        p1, p2 = shape_operator.numeric_copy(p1), shape_operator.numeric_copy(p2)
        phi = shape_operator.DiffeoPatch(phi.map)
    u = np.asarray(args.u, dtype=float)
    tol = args.check_tol
    if args.radial_line:
        res = shape_operator.radial_line_variant(p1, phi, p2, u, tol=tol)
        rep.add("S1", res.S1.matrix)
        rep.add("S2", res.S2.matrix)
        rep.add("Q", res.Q.matrix)
        rep.add("sigma_tilde", res.sigma_tilde)
        rep.add("radial_angle", res.angle)
        rep.add("residual", res.residual)
        rep.add("passed", res.passed)
        return EXIT_OK if res.passed else EXIT_OBSTRUCTION
    res = shape_operator.check_compatibility(p1, phi, p2, u, tol=tol)
    rep.add("u", u)
    rep.add("u_image", res.image_parameter)
    rep.add("S1", res.S1.matrix)
    rep.add("S2", res.S2.matrix)
    rep.add("Q", res.Q.matrix)
    rep.add("sigma", res.sigma)
    rep.add("residual", res.residual)
    rep.add("tol", res.tol)
    rep.add("passed", res.passed)
    return EXIT_OK if res.passed else EXIT_OBSTRUCTION


def cmd_extract(args, rep: Report) -> int:
    boundary = extract.BoundarySample.load(args.boundary)
    g = extract.extract_medial_2d(boundary, args.prune_ratio)
    if args.out:
        graph.save_graph(g, args.out)
        rep.add("written", str(args.out))
    rep.add("vertices", len(g.vertices))
    rep.add("curves", len(g.curves))
    branches = g.branch_vertices()
    rep.add("branch_vertices", len(branches))
    for vid in branches:
        config = extract.branch_config_from_graph(g, vid)
        rep.add(f"angles_{vid}", config.angles, angle=True)
        rep.add(f"blum_violation_{vid}", branch.validate_blum_config(config).max_violation)
    return EXIT_OK


def cmd_render(args, rep: Report) -> int:
    if not args.out:
        raise SchemaError("render needs --out")
    if args.theta:
        if len(args.theta) == 3:
            item = branch.y_branch_config(_triple(args.theta))
        elif len(args.theta) == 4:
            quad = branch.AngleQuad.from_approximate(args.theta)
            t = args.t if args.t is not None else 0.25 * min(quad.theta)
            item = branch.x_branch_config(quad, t)
        else:
            raise SchemaError("--theta takes 3 or 4 angles")
    elif args.input:
        doc = _load_json(args.input)
        if "vertices" in doc and args.vertex is None:
            item = graph.parse_medial_graph(doc)
        else:
            _, item = config_from_source(args.input, args.vertex)
    else:
        raise SchemaError("render needs an input file or --theta")
    path = svg.emit_svg(item, args.out)
    rep.add("written", str(path))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage problems are errors (exit 1); exit 2 is reserved for obstructions
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_number, default=1e-9, help="comparison tolerance")
    common.add_argument("--step", type=_number, default=1e-5, help="finite-difference step")
    common.add_argument("--format", choices=("human", "machine"), default="human")
    common.add_argument("--out", type=Path, help="output path (SVG, graph or report)")

    parser = _Parser(prog="medial-rigidity",
                     description="Projective and second-order invariants of medial axes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cross-ratio", parents=[common], help="cross ratio of 4 points or lines")
    p.add_argument("values", nargs="*", type=_number)
    p.add_argument("--slopes", action="store_true", help="values are line slopes")
    p.add_argument("--pencil", type=Path, help="JSON file with a line or hyperplane pencil")
    p.set_defaults(func=cmd_cross_ratio)

    p = sub.add_parser("orbit", parents=[common], help="S3 orbit of a cross ratio")
    p.add_argument("value", type=_number)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("y-angles", parents=[common], help="radial offsets at a Y-branch")
    p.add_argument("theta", nargs=3, type=_number)
    p.set_defaults(func=cmd_y_angles)

    p = sub.add_parser("x-check", parents=[common], help="four-sheet compatibility")
    p.add_argument("theta", nargs=4, type=_number)
    p.add_argument("--t", type=_number, help="free parameter of the solution family")
    p.set_defaults(func=cmd_x_check)

    p = sub.add_parser("triple", parents=[common], help="triple cross ratio of a Y-branch")
    p.add_argument("theta", nargs=3, type=_number)
    p.set_defaults(func=cmd_triple)

    p = sub.add_parser("compare", parents=[common], help="obstruction between two Y-branches")
    p.add_argument("a", help="graph/config file or comma-separated angles")
    p.add_argument("b", help="graph/config file or comma-separated angles")
    p.add_argument("--vertex-a")
    p.add_argument("--vertex-b")
    p.add_argument("--reflections", action="store_true",
                   help="also allow orientation-reversing relabelings")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("rank", parents=[common], help="rank of the triple map Jacobian")
    p.add_argument("theta", nargs="*", type=_number)
    p.add_argument("--scan", type=int, help="grid resolution per axis")
    p.add_argument("--probe", action="store_true", help="also run the local uniqueness probe")
    p.add_argument("--radius", type=_number, default=0.05)
    p.add_argument("--samples", type=int, default=500)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("distort", parents=[common], help="linear map pinned on two branches")
    p.add_argument("--alpha", type=_number, default=math.pi / 3)
    p.add_argument("--source", type=Path)
    p.add_argument("--target", type=Path)
    p.add_argument("--pinned", default="0,1", help="comma-separated pinned branch indices")
    p.set_defaults(func=cmd_distort)

    p = sub.add_parser("shape-check", parents=[common], help="second-order compatibility residual")
    p.add_argument("--patch1", required=True, type=Path)
    p.add_argument("--patch2", required=True, type=Path)
    p.add_argument("--diffeo", required=True, type=Path)
    p.add_argument("--u", nargs="+", type=_number, required=True, help="parameter point")
    p.add_argument("--check-tol", type=_number, help="residual tolerance (default by pipeline)")
    p.add_argument("--numeric", action="store_true", help="ignore analytic derivatives")
    p.add_argument("--radial-line", action="store_true", help="radial-line-preserving variant")
    p.set_defaults(func=cmd_shape_check)

    p = sub.add_parser("extract", parents=[common], help="medial graph of a sampled boundary")
    p.add_argument("boundary", type=Path)
    p.add_argument("--prune-ratio", type=_number, default=0.5)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("render", parents=[common], help="SVG of a configuration or graph")
    p.add_argument("input", nargs="?")
    p.add_argument("--vertex")
    p.add_argument("--theta", nargs="+", type=_number)
    p.add_argument("--t", type=_number)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    rep = Report()
    try:
        code = args.func(args, rep)
    except (MedialError, ValueError, KeyError, OSError) as exc:
        sys.stdout.write(rep.render(args.format))
        reason = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
        print(f"error: {type(exc).__name__}: {reason}", file=sys.stderr)
        return EXIT_ERROR
    text = rep.render(args.format)
    if args.out and args.command not in ("extract", "render"):
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
