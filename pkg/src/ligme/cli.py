"""Command-line harness.

Subcommands:

``ligme experiment <scenario> --out dir/``
    Run one scenario (convex vs enhanced penalties) and write
    ``trace.csv``, ``mse.csv``, ``estimate.mat.txt`` and, for the matrix
    scenarios, ``singvals.csv`` into the output directory. Exits with a
    nonzero status if a convexity certificate fails, unless ``--force``.

``ligme sweep <scenario> --mu-grid ... --out dir/``
    Evaluate the scenario across a grid of penalty weights, writing
    ``mse.csv`` with one row per weight.

``ligme design-b --a A.txt --l L.txt --mu ... --theta ...``
    Design an enhancement matrix from matrix files and report the
    convexity certificate.

``ligme solve --config cfg.json --out-x x.txt``
    Solve a model described by a JSON config pointing at matrix files;
    optionally writes an ``iter,p_residual,objective[,se]`` trace.

Matrix files use the plain-text format of :mod:`ligme.matio`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import matio
from .design import design_b
from .experiments import SCENARIOS, ExperimentSpec, run_experiment, sweep_mu
from .linops import DenseOperator, Identity, ZeroOperator
from .model import InnerSolveConfig, Problem, certify_convexity, objective
from .penalties import L1Norm, NuclearNorm, SeparableSum
from .solver import SolverConfig, solve


def _parse_mu(text: str):
    parts = [float(p) for p in text.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def _write_csv(path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(c) for c in row) + "\n")


def _format_cell(c) -> str:
    if isinstance(c, (float, np.floating)):
        return repr(float(c))
    return str(c)


def _cmd_experiment(args) -> int:
    spec = ExperimentSpec(
        scenario=args.scenario,
        snr_db=args.snr,
        mu_convex=_parse_mu(args.mu_convex) if args.mu_convex else None,
        mu_ligme=_parse_mu(args.mu) if args.mu else None,
        theta=args.theta,
        seed=args.seed,
        replications=args.reps,
        iters=args.iters,
    )
    try:
        result = run_experiment(spec, require_certificate=not args.force)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    names = list(result.reports)

    for name, report in result.reports.items():
        cert = report.certificate
        status = "holds" if cert.holds else "FAILS"
        print(f"{name}: mu={report.mu} mse={report.mse:.6g} "
              f"certificate {status} (min_eig={cert.min_eig:.3e})")
        if report.num_rank is not None:
            print(f"    num-rank={report.num_rank} "
                  f"singular values={np.array2string(report.singular_values[:6], precision=4)}")

    traces = [result.reports[n].se_trace for n in names]
    rows = [(k + 1, *(t[k] for t in traces)) for k in range(len(traces[0]))]
    _write_csv(os.path.join(args.out, "trace.csv"),
               ["iter"] + [f"se_{n}" for n in names], rows)

    _write_csv(os.path.join(args.out, "mse.csv"),
               ["variant", "mu", "mse"],
               [(n, str(result.reports[n].mu), result.reports[n].mse) for n in names])

    if result.mat_shape is not None:
        _write_csv(os.path.join(args.out, "singvals.csv"),
                   ["variant"] + [f"sigma_{i+1}" for i in range(result.mat_shape[0])],
                   [(n, *result.reports[n].singular_values) for n in names])

    last = result.reports[names[-1]]
    estimate = last.final_x
    if result.mat_shape is not None:
        estimate = estimate.reshape(result.mat_shape, order="F")
        matio.save_matrix(os.path.join(args.out, "estimate.mat.txt"), estimate)
    else:
        matio.save_vector(os.path.join(args.out, "estimate.mat.txt"), estimate)

    if not args.force and any(not r.certificate.holds for r in result.reports.values()):
        return 2
    return 0


def _cmd_sweep(args) -> int:
    spec = ExperimentSpec(
        scenario=args.scenario,
        snr_db=args.snr,
        theta=args.theta,
        seed=args.seed,
        replications=args.reps,
        iters=args.iters,
    )
    if args.scenario == "completion_tv":
        grid = [tuple(float(x) for x in g.split(":")) for g in args.mu_grid.split(",")]
    else:
        grid = [float(g) for g in args.mu_grid.split(",")]
    rows = sweep_mu(spec, grid)
    os.makedirs(args.out, exist_ok=True)
    names = [k for k in rows[0] if k != "mu"]
    _write_csv(os.path.join(args.out, "mse.csv"),
               ["mu"] + [f"mse_{n}" for n in names],
               [(str(r["mu"]), *(r[n] for n in names)) for r in rows])
    for r in rows:
        print("mu=%s  %s" % (r["mu"], "  ".join(f"{n}={r[n]:.6g}" for n in names)))
    return 0


def _cmd_design_b(args) -> int:
    a = matio.load_matrix(args.a)
    l_mat = matio.load_matrix(args.l)
    tilde = matio.load_matrix(args.tilde_l) if args.tilde_l else None
    des = design_b(a, l_mat, args.mu, args.theta, tilde_l=tilde)
    matio.save_matrix(args.out_b, des.b.to_dense())

    prob = Problem(
        a=DenseOperator(a), y=np.zeros(a.shape[0]), l=DenseOperator(l_mat),
        b=des.b, mu=args.mu, penalty=L1Norm(l_mat.shape[0]),
    )
    cert = certify_convexity(prob)
    lines = [
        f"theta {des.theta}",
        f"mu {des.mu}",
        f"min_eig {cert.min_eig!r}",
        f"holds {cert.holds}",
        f"spectrum_max {float(np.max(des.spectrum))!r}",
    ]
    report = "\n".join(lines) + "\n"
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report)
    print(report, end="")
    return 0 if cert.holds else 2


def _load_penalty(spec: dict):
    kind = spec["kind"]
    if kind == "l1":
        return lambda n: L1Norm(n)
    if kind == "nuclear":
        rows, cols = int(spec["rows"]), int(spec["cols"])
        return lambda n: _expect_len(NuclearNorm(rows, cols), n)
    if kind == "separable":
        def build(n):
            parts = []
            for part in spec["parts"]:
                if part["kind"] == "l1":
                    inner = L1Norm(int(part["len"]))
                elif part["kind"] == "nuclear":
                    inner = NuclearNorm(int(part["rows"]), int(part["cols"]))
                else:
                    raise ValueError(f"unknown penalty part kind {part['kind']!r}")
                parts.append((float(part.get("weight", 1.0)), inner))
            return _expect_len(SeparableSum(parts), n)
        return build
    raise ValueError(f"unknown penalty kind {kind!r}")


def _expect_len(penalty, n):
    if penalty.total_len != n:
        raise ValueError(
            f"penalty length {penalty.total_len} does not match operator range {n}"
        )
    return penalty


def _cmd_solve(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)

    a = DenseOperator(matio.load_matrix(cfg["a"]))
    y = matio.load_vector(cfg["y"])
    l_op = DenseOperator(matio.load_matrix(cfg["l"])) if "l" in cfg else Identity(a.cols)
    if "b" in cfg:
        b_op = DenseOperator(matio.load_matrix(cfg["b"]))
    else:
        b_op = ZeroOperator(l_op.rows)
    penalty = _load_penalty(cfg.get("penalty", {"kind": "l1"}))(l_op.rows)
    problem = Problem(a=a, y=y, l=l_op, b=b_op, mu=float(cfg["mu"]), penalty=penalty)

    solver_cfg = SolverConfig(
        kappa=float(cfg.get("kappa", 1.001)),
        sigma=cfg.get("sigma"),
        tau=cfg.get("tau"),
        max_iter=int(cfg.get("max_iter", 10_000)),
        p_residual_tol=float(cfg.get("tol", 1e-9)),
    )
    inner = InnerSolveConfig(tol=float(cfg.get("inner_tol", 1e-10)))
    truth = matio.load_vector(cfg["truth"]) if "truth" in cfg else None
    result = solve(problem, solver_cfg, ground_truth=truth, inner=inner,
                   track_objective=args.trace is not None)

    matio.save_vector(args.out_x, result.x)
    final_obj = objective(problem, result.x, inner)
    print(f"iterations {result.iterations} converged {result.converged} "
          f"objective {final_obj:.10g}")

    if args.trace:
        header = ["iter", "p_residual", "objective"]
        cols = [np.arange(1, result.iterations + 1), result.p_residuals,
                result.objectives]
        if truth is not None:
            header.append("se")
            cols.append(result.se_trace)
        rows = list(zip(*cols))
        _write_csv(args.trace, header, [(int(r[0]), *map(float, r[1:])) for r in rows])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ligme",
        description="Enhanced-penalty regularized least squares: design, solve, reproduce",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_exp = sub.add_parser("experiment", help="run one recovery scenario")
    p_exp.add_argument("scenario", choices=SCENARIOS)
    p_exp.add_argument("--mu", help="enhanced-penalty weight (or 'a,b' pair)")
    p_exp.add_argument("--mu-convex", help="convex-penalty weight (or 'a,b' pair)")
    p_exp.add_argument("--theta", type=float, default=0.99)
    p_exp.add_argument("--snr", type=float, default=None)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--iters", type=int, default=None)
    p_exp.add_argument("--reps", type=int, default=20)
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--force", action="store_true",
                       help="run even if a convexity certificate fails")
    p_exp.set_defaults(func=_cmd_experiment)

    p_sweep = sub.add_parser("sweep", help="MSE across a grid of penalty weights")
    p_sweep.add_argument("scenario", choices=SCENARIOS)
    p_sweep.add_argument("--mu-grid", required=True,
                         help="comma-separated weights; for completion_tv, 'a:b' pairs")
    p_sweep.add_argument("--theta", type=float, default=0.99)
    p_sweep.add_argument("--snr", type=float, default=None)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--iters", type=int, default=None)
    p_sweep.add_argument("--reps", type=int, default=20)
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_design = sub.add_parser("design-b", help="design an enhancement matrix")
    p_design.add_argument("--a", required=True, help="matrix file for A")
    p_design.add_argument("--l", required=True, help="matrix file for L")
    p_design.add_argument("--mu", type=float, required=True)
    p_design.add_argument("--theta", type=float, default=0.99)
    p_design.add_argument("--tilde-l", help="optional explicit completion matrix file")
    p_design.add_argument("--out-b", required=True)
    p_design.add_argument("--report")
    p_design.set_defaults(func=_cmd_design_b)

    p_solve = sub.add_parser("solve", help="solve a model from a JSON config")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out-x", required=True)
    p_solve.add_argument("--trace", help="CSV path for iter,p_residual,objective[,se]")
    p_solve.set_defaults(func=_cmd_solve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
