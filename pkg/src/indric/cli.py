"""Command-line front end: problem files, solve/certify/scan/simulate, demos.

Problem files are JSON (see FORMATS.md at the repository root for the
bit-exact schema); trajectories are written as CSV with columns
``t``, the row-major entries of P, then ``gap``, with gains in a sidecar
file, or as a single JSON document.  Exit codes: 0 success or Certified,
2 certificate rejected, 3 solver failure, 4 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import certify, lqmc
from .demos import DEMOS, build_demo
from .errors import IndricError, ParseError, ValidationError
from .riccati import (
    RiccatiProblem,
    RiccatiSolution,
    SolverOptions,
    quasilinearize,
)
from .timepath import CONSTANT_LEFT, LINEAR, MatrixPath, TimeGrid

EXIT_OK = 0
EXIT_REJECTED = 2
EXIT_SOLVER = 3
EXIT_INPUT = 4

_MATRIX_KEYS = ("A", "B", "C", "D", "R", "Q")
_SYM_TOL = 1e-12


def _matrix_array(raw, d, where):
    m = np.asarray(raw, dtype=float)
    if m.shape != (d, d):
        raise ValidationError(f"{where}: expected a {d}x{d} matrix, got shape {m.shape}")
    return m


def _check_symmetric(m, where):
    skew = np.abs(m - m.T).max(initial=0.0)
    if skew > _SYM_TOL * (1.0 + np.abs(m).max(initial=0.0)):
        raise ValidationError(f"{where}: matrix must be symmetric (asymmetry {skew:.2e})")


def _resample_series(times, values, grid, mode, where):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size != values.shape[0]:
        raise ValidationError(f"{where}: times and values disagree in length")
    if np.any(np.diff(times) <= 0.0):
        raise ValidationError(f"{where}: times must be strictly increasing")
    if times[0] < -1e-12 or times[-1] > grid.horizon * (1.0 + 1e-12):
        raise ValidationError(f"{where}: times must lie within [0, {grid.horizon}]")
    nodes = grid.nodes
    d = values.shape[1]
    out = np.empty((nodes.size, d, d))
    if mode == CONSTANT_LEFT:
        idx = np.clip(np.searchsorted(times, nodes, side="right") - 1, 0, times.size - 1)
        out[:] = values[idx]
    else:
        for i in range(d):
            for j in range(d):
                out[:, i, j] = np.interp(nodes, times, values[:, i, j])
    return out


def _parse_matrix(raw, grid, d, where, symmetric=False):
    """One matrix entry: nested array (constant) or a sampled time series."""
    if isinstance(raw, dict):
        missing = {"times", "values"} - set(raw)
        if missing:
            raise ValidationError(f"{where}: sampled series needs keys {sorted(missing)}")
        mode = raw.get("interpolation", LINEAR)
        if mode not in (LINEAR, CONSTANT_LEFT):
            raise ValidationError(f"{where}: unknown interpolation mode {mode!r}")
        values = np.asarray(raw["values"], dtype=float)
        if values.ndim != 3 or values.shape[1:] != (d, d):
            raise ValidationError(
                f"{where}: values must be a list of {d}x{d} matrices, got {values.shape}"
            )
        if symmetric:
            for k in range(values.shape[0]):
                _check_symmetric(values[k], f"{where}[{k}]")
        samples = _resample_series(raw["times"], values, grid, mode, where)
        if symmetric:
            samples = 0.5 * (samples + samples.transpose(0, 2, 1))
        return MatrixPath(grid, samples, mode)
    m = _matrix_array(raw, d, where)
    if symmetric:
        _check_symmetric(m, where)
        m = 0.5 * (m + m.T)
    return MatrixPath.constant(m, grid)


def parse_problem(source, grid_override=None) -> RiccatiProblem:
    """Parse a problem from a JSON file path, JSON text, or a decoded dict."""
    if isinstance(source, dict):
        doc = source
    else:
        text = Path(source).read_text() if Path(str(source)).is_file() else str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("top level must be a JSON object")
    for key in ("dimension", "horizon", "grid_points", "system", "weights"):
        if key not in doc:
            raise ValidationError(f"missing top-level key {key!r}")
    d = int(doc["dimension"])
    if d < 1:
        raise ValidationError(f"dimension must be positive, got {d}")
    horizon = float(doc["horizon"])
    n_steps = int(grid_override if grid_override is not None else doc["grid_points"])
    try:
        grid = TimeGrid(horizon, n_steps)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc

    system = doc["system"]
    weights = doc["weights"]
    for key in ("A", "B", "C", "D"):
        if key not in system:
            raise ValidationError(f"system: missing matrix {key!r}")
    for key in ("R", "Q", "G"):
        if key not in weights:
            raise ValidationError(f"weights: missing matrix {key!r}")

    paths = {
        key: _parse_matrix(system[key], grid, d, f"system.{key}") for key in ("A", "B", "C", "D")
    }
    paths["R"] = _parse_matrix(weights["R"], grid, d, "weights.R", symmetric=True)
    paths["Q"] = _parse_matrix(weights["Q"], grid, d, "weights.Q", symmetric=True)
    g = _matrix_array(weights["G"], d, "weights.G")
    _check_symmetric(g, "weights.G")
    return RiccatiProblem(grid=grid, G=0.5 * (g + g.T), **paths)


def serialize_problem(prob: RiccatiProblem) -> dict:
    """JSON-able document that re-parses to a bit-identical problem."""

    def series(path):
        return {
            "times": prob.grid.nodes.tolist(),
            "values": path.samples.tolist(),
            "interpolation": path.interpolation,
        }

    return {
        "dimension": prob.dim,
        "horizon": prob.grid.horizon,
        "grid_points": prob.grid.n_steps,
        "system": {k: series(getattr(prob, k)) for k in ("A", "B", "C", "D")},
        "weights": {
            "R": series(prob.R),
            "Q": series(prob.Q),
            "G": prob.G.tolist(),
        },
    }


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; input errors must be 4 here
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _add_problem_args(sub):
    sub.add_argument("problem", nargs="?", help="problem file (JSON)")
    sub.add_argument("--demo", choices=sorted(DEMOS), help="use a built-in demo problem")
    sub.add_argument("--grid", type=int, default=None, help="override grid step count (default 1000)")
    for flag in ("a1", "a2", "r1", "r2", "a", "b", "c", "q", "r"):
        sub.add_argument(f"--{flag}", type=float, default=None, help=argparse.SUPPRESS)


def _load_problem(args) -> RiccatiProblem:
    if args.demo is not None:
        params = {
            k: getattr(args, k)
            for k in ("a1", "a2", "r1", "r2", "a", "b", "c", "q", "r")
            if getattr(args, k) is not None
        }
        n_steps = args.grid if args.grid is not None else 1000
        try:
            return build_demo(args.demo, n_steps=n_steps, **params)
        except KeyError as exc:
            raise ValidationError(str(exc)) from exc
    if args.problem is None:
        raise ValidationError("either a problem file or --demo is required")
    if not Path(args.problem).is_file():
        raise ValidationError(f"no such file: {args.problem}")
    return parse_problem(args.problem, grid_override=args.grid)


def _fmt(x):
    return f"{x:.17g}"


def _write_solution_csv(sol: RiccatiSolution, out: Path):
    d = sol.P.shape[0]
    p_cols = [f"p_{i}_{j}" for i in range(d) for j in range(d)]
    nodes = sol.P.grid.nodes
    with open(out, "w") as fh:
        fh.write(",".join(["t"] + p_cols + ["gap"]) + "\n")
        for k, t in enumerate(nodes):
            row = [t, *sol.P.samples[k].ravel(), sol.gap.samples[k, 0, 0]]
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    gain_cols = [f"k_{i}_{j}" for i in range(d) for j in range(d)]
    gain_path = out.with_suffix(".gain.csv")
    with open(gain_path, "w") as fh:
        fh.write(",".join(["t"] + gain_cols) + "\n")
        for k, t in enumerate(nodes):
            row = [t, *sol.gain.samples[k].ravel()]
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return gain_path


def _solution_json(sol: RiccatiSolution) -> dict:
    return {
        "t": sol.P.grid.nodes.tolist(),
        "P": sol.P.samples.tolist(),
        "gain": sol.gain.samples.tolist(),
        "gap": sol.gap.scalar_values.tolist(),
        "iterations": sol.iterations,
        "sup_residual": sol.sup_residual,
        "iterate_history_norms": sol.iterate_history_norms,
    }


def _solve(args):
    prob = _load_problem(args)
    opts = SolverOptions(conv_tol=args.tol)
    result = quasilinearize(prob, opts)
    if isinstance(result, RiccatiSolution):
        print("status: converged")
        print(f"iterations: {result.iterations}")
        print(f"sup residual: {result.sup_residual:.6e}")
        print(f"min gap: {result.gap.scalar_values.min():.6e}")
        print(f"P(0) = {result.P.samples[0].tolist()}")
        if args.out:
            out = Path(args.out)
            if args.format == "json":
                out.write_text(json.dumps(_solution_json(result)))
                print(f"wrote {out}")
            else:
                gain_path = _write_solution_csv(result, out)
                print(f"wrote {out} and {gain_path}")
        return EXIT_OK
    print(f"status: {result.kind.value}")
    if result.at_time is not None:
        print(f"at time: {result.at_time:.6g}")
    print(f"at iteration: {result.at_iteration}")
    print(f"detail: {result.diagnostics}")
    return EXIT_SOLVER


def _certify(args):
    prob = _load_problem(args)
    if args.alpha is not None and not args.alpha_scan:
        cert = certify.certify_scalar(prob, args.alpha)
        alpha = args.alpha
    else:
        alpha, cert = certify.alpha_scan(prob)
    print(f"verdict: {cert.verdict.value}")
    print(f"alpha: {alpha:.9g}")
    if cert.margin is not None:
        print(f"margin: {cert.margin:.9g}")
    return EXIT_OK if cert.certified else EXIT_REJECTED


def _scan(args):
    prob = _load_problem(args)
    n_coarse = args.coarse
    alphas = np.linspace(certify.ALPHA_LO, certify.ALPHA_HI, n_coarse)
    rows = []
    for a in alphas:
        c = certify.certify_scalar(prob, float(a))
        rows.append((float(a), c.margin if c.margin is not None else float("-inf")))
    best_alpha, best = certify.alpha_scan(prob, n_coarse)
    print("alpha,margin")
    for a, m in rows:
        print(f"{a:.6f},{m:.9g}")
    print(f"best alpha: {best_alpha:.9g}")
    if best.margin is not None:
        print(f"best margin: {best.margin:.9g}")
    print(f"verdict: {best.verdict.value}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("alpha,margin\n")
            for a, m in rows:
                fh.write(f"{_fmt(a)},{_fmt(m)}\n")
    return EXIT_OK if best.certified else EXIT_REJECTED


def _simulate(args):
    prob = _load_problem(args)
    result = quasilinearize(prob, SolverOptions(conv_tol=args.tol))
    if not isinstance(result, RiccatiSolution):
        print(f"status: {result.kind.value}")
        print(f"detail: {result.diagnostics}")
        return EXIT_SOLVER
    if args.x0 is not None:
        x0 = np.array([float(v) for v in args.x0.split(",")])
    else:
        x0 = np.zeros(prob.dim)
        x0[0] = 1.0
    steps = args.sim_steps if args.sim_steps is not None else prob.grid.n_steps
    cfg = lqmc.SimConfig(n_paths=args.paths, n_steps_sim=steps, seed=args.seed, x0=x0)
    est = lqmc.simulate_cost(prob, result.gain, cfg)
    reference = float(x0 @ result.P.samples[0] @ x0)
    print(f"paths: {est.n_paths}")
    print(f"cost estimate: {est.mean:.9g}")
    print(f"std error: {est.std_error:.3e}")
    print(f"x0' P(0) x0: {reference:.9g}")
    print(f"difference: {est.mean - reference:.3e}")
    return EXIT_OK


def _demo(args):
    params = {
        k: getattr(args, k)
        for k in ("a1", "a2", "r1", "r2", "a", "b", "c", "q", "r")
        if getattr(args, k) is not None
    }
    n_steps = args.grid if args.grid is not None else 1000
    try:
        prob = build_demo(args.name, n_steps=n_steps, **params)
    except KeyError as exc:
        raise ValidationError(str(exc)) from exc
    doc = json.dumps(serialize_problem(prob))
    if args.out:
        Path(args.out).write_text(doc)
        print(f"wrote {args.out}")
    else:
        print(doc)
    return EXIT_OK


def _build_parser():
    parser = _Parser(prog="indric", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem and write the trajectory")
    _add_problem_args(p_solve)
    p_solve.add_argument("--tol", type=float, default=None, help="convergence tolerance")
    p_solve.add_argument("--out", default=None, help="output path")
    p_solve.add_argument("--format", choices=("csv", "json"), default="csv")
    p_solve.set_defaults(func=_solve)

    p_cert = sub.add_parser("certify", help="run the solvability certificate")
    _add_problem_args(p_cert)
    p_cert.add_argument("--alpha", type=float, default=None, help="fix the certificate parameter")
    p_cert.add_argument("--alpha-scan", action="store_true", help="search alpha for the best margin")
    p_cert.set_defaults(func=_certify)

    p_scan = sub.add_parser("scan", help="tabulate the certificate margin over alpha")
    _add_problem_args(p_scan)
    p_scan.add_argument("--coarse", type=int, default=32, help="coarse grid size")
    p_scan.add_argument("--out", default=None, help="write the margin curve as CSV")
    p_scan.set_defaults(func=_scan)

    p_sim = sub.add_parser("simulate", help="Monte Carlo check of the closed-loop cost")
    _add_problem_args(p_sim)
    p_sim.add_argument("--seed", type=int, required=True, help="RNG seed (required)")
    p_sim.add_argument("--paths", type=int, default=10000)
    p_sim.add_argument("--sim-steps", type=int, default=None)
    p_sim.add_argument("--x0", default=None, help="comma-separated start state")
    p_sim.add_argument("--tol", type=float, default=None)
    p_sim.set_defaults(func=_simulate)

    p_demo = sub.add_parser("demo", help="emit a built-in demo problem as JSON")
    p_demo.add_argument("name", choices=sorted(DEMOS))
    p_demo.add_argument("--grid", type=int, default=None)
    p_demo.add_argument("--out", default=None)
    for flag in ("a1", "a2", "r1", "r2", "a", "b", "c", "q", "r"):
        p_demo.add_argument(f"--{flag}", type=float, default=None, help=argparse.SUPPRESS)
    p_demo.set_defaults(func=_demo)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    except IndricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    if argv is None:
        sys.exit(code)
    return code
