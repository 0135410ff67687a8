"""Command-line front end.

Subcommands: ``solve``, ``landscape``, ``bench`` and ``sweep``.  Exit status is
0 when every requested solve converged, 1 when one hit its iteration cap and
2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import InvalidModel
from .formats import landscape_pixels, ms, policy_hash, write_pgm, write_policy, write_trace_csv
from .gridworld import GridError, GridMap, NoiseModel, benchmark_grid, build_mdp, load_grid, rollout_policy
from .mfpt import DIRECT, fast
from .solvers import COMPONENTS, SOLVERS, SolverConfig, run_solver

log = logging.getLogger("reachmdp")

BENCH_COLUMNS = ["map", "states", "solver", "iterations", "converged", "total_ms"] + [f"{c}_ms" for c in COMPONENTS]


class UsageError(Exception):
    pass


def _add_model_args(p: argparse.ArgumentParser):
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--noise", type=float, default=0.1, help="transition noise eta")
    p.add_argument("--goal-reward", type=float, default=100.0)
    p.add_argument("--obstacle-penalty", type=float, default=-1.0)


def _add_solver_args(p: argparse.ArgumentParser, default_eps=1e-6):
    p.add_argument("--epsilon", type=float, default=default_eps)
    p.add_argument("--mfpt-period", type=int, default=3)
    p.add_argument("--pi-mfpt-period", type=int, default=1)
    p.add_argument("--mfpt-tol", type=float, default=None,
                   help="use the Gauss-Seidel MFPT path with this residual tolerance")
    p.add_argument("--max-iters", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reachmdp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one map with one solver")
    solve.add_argument("--map", required=True)
    solve.add_argument("--solver", required=True, choices=list(SOLVERS))
    _add_model_args(solve)
    _add_solver_args(solve)
    solve.add_argument("--seed", type=int, default=0, help="rollout RNG seed")
    solve.add_argument("--clip", type=float, default=100.0)
    solve.add_argument("--trace-out")
    solve.add_argument("--landscape-out", help="PGM prefix, one file per MFPT recomputation")
    solve.add_argument("--policy-out")
    solve.add_argument("--rollout-out", help="write a rollout from the start cell, one state per line")
    solve.add_argument("--rollout-steps", type=int, default=10_000)

    land = sub.add_parser("landscape", help="export reachability heatmaps as PGM")
    land.add_argument("--map", required=True)
    land.add_argument("--solver", default="mfpt-pi", choices=["mfpt-vi", "mfpt-pi"])
    _add_model_args(land)
    _add_solver_args(land)
    land.add_argument("--clip", type=float, default=100.0)
    land.add_argument("--landscape-out", required=True)
    land.add_argument("--trace-out")

    bench = sub.add_parser("bench", help="iterations and timings for maps x solvers")
    src = bench.add_mutually_exclusive_group(required=True)
    src.add_argument("--maps", nargs="+")
    src.add_argument("--sizes", nargs="+", type=int, help="generate square benchmark maps")
    bench.add_argument("--seed", type=int, default=0, help="map generator seed for --sizes")
    bench.add_argument("--solvers", nargs="+", default=list(SOLVERS), choices=list(SOLVERS))
    _add_model_args(bench)
    _add_solver_args(bench, default_eps=0.1)
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--out", help="CSV path (default stdout)")

    sweep = sub.add_parser("sweep", help="MFPT-VI runtime versus recomputation period")
    sweep.add_argument("--map", required=True)
    sweep.add_argument("--p-values", nargs="+", type=int, default=list(range(1, 11)))
    sweep.add_argument("--repeats", type=int, default=1, help="keep the fastest of N timings")
    _add_model_args(sweep)
    _add_solver_args(sweep)
    sweep.add_argument("--out", help="CSV path (default stdout)")
    return parser


def _config(args, **overrides) -> SolverConfig:
    kw = dict(
        epsilon=args.epsilon,
        mfpt_period=args.mfpt_period,
        pi_mfpt_period=args.pi_mfpt_period,
        mfpt_accuracy=DIRECT if args.mfpt_tol is None else fast(args.mfpt_tol),
        max_iterations=args.max_iters,
    )
    kw.update(overrides)
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _model(grid: GridMap, args):
    try:
        return build_mdp(grid, noise=NoiseModel(args.noise), goal_reward=args.goal_reward,
                         obstacle_penalty=args.obstacle_penalty, gamma=args.gamma)
    except (ValueError, InvalidModel) as exc:
        raise UsageError(str(exc)) from None


def _load(path) -> GridMap:
    try:
        return load_grid(path)
    except OSError as exc:
        raise UsageError(f"cannot read map {path}: {exc.strerror}") from None
    except GridError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _landscape_writer(grid: GridMap, prefix: str, clip: float, written: list):
    def hook(k, landscape):
        pixels = landscape_pixels(landscape, clip).reshape(grid.cells.shape)
        if grid.is_3d:
            for z in range(grid.depth):
                path = f"{prefix}_{k:04d}_z{z}.pgm"
                write_pgm(pixels[z], path)
                written.append(path)
        else:
            path = f"{prefix}_{k:04d}.pgm"
            write_pgm(pixels[0], path)
            written.append(path)
    return hook


def summary_line(solver, mdp, result) -> str:
    return (f"solver={solver} states={mdp.num_states} iterations={result.iterations} "
            f"total_ms={ms(result.trace.total_ms)} converged={str(result.converged).lower()} "
            f"policy_hash={policy_hash(result.policy):016x}")


def cmd_solve(args) -> int:
    grid = _load(args.map)
    mdp = _model(grid, args)
    cfg = _config(args)
    if args.clip <= 0:
        raise UsageError("--clip must be positive")
    kwargs = {}
    written: list[str] = []
    if args.landscape_out:
        if not args.solver.startswith("mfpt"):
            raise UsageError("--landscape-out needs an MFPT solver")
        kwargs["on_landscape"] = _landscape_writer(grid, args.landscape_out, args.clip, written)
    result = run_solver(args.solver, mdp, cfg, **kwargs)
    if args.trace_out:
        write_trace_csv(result.trace, args.trace_out)
    if args.policy_out:
        write_policy(result.policy, args.policy_out, mdp.action_names)
    if args.rollout_out:
        start = grid.start if grid.start is not None else 0
        path = rollout_policy(mdp, result.policy, start, args.rollout_steps, args.seed)
        Path(args.rollout_out).write_text("".join(f"{s}\n" for s in path))
    print(summary_line(args.solver, mdp, result))
    return 0 if result.converged else 1


def cmd_landscape(args) -> int:
    grid = _load(args.map)
    mdp = _model(grid, args)
    cfg = _config(args)
    if args.clip <= 0:
        raise UsageError("--clip must be positive")
    written: list[str] = []
    result = run_solver(args.solver, mdp, cfg,
                        on_landscape=_landscape_writer(grid, args.landscape_out, args.clip, written))
    if args.trace_out:
        write_trace_csv(result.trace, args.trace_out)
    for path in written:
        print(path)
    print(summary_line(args.solver, mdp, result))
    return 0 if result.converged else 1


def _bench_cell(job):
    label, grid_text, solver, model_kw, cfg = job
    from .gridworld import parse_grid

    mdp = build_mdp(parse_grid(grid_text), **model_kw)
    result = run_solver(solver, mdp, cfg)
    totals = result.trace.component_totals()
    row = {"map": label, "states": mdp.num_states, "solver": solver, "iterations": result.iterations,
           "converged": str(result.converged).lower(), "total_ms": ms(result.trace.total_ms)}
    row.update({f"{c}_ms": ms(totals[c]) for c in COMPONENTS})
    return row


def bench_rows(grids: list[tuple[str, GridMap]], solvers, model_kw, cfg, jobs=1) -> list[dict]:
    """One row per (map, solver), in input order whatever the completion order."""
    cells = [(label, g.to_text(), s, model_kw, cfg) for label, g in grids for s in solvers]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_bench_cell, cells))
    return [_bench_cell(c) for c in cells]


def _emit_csv(rows, columns, out):
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if out:
            fh.close()


def _model_kwargs(args):
    if not 0.0 <= args.noise < 1.0:
        raise UsageError("--noise must lie in [0, 1)")
    return dict(noise=NoiseModel(args.noise), goal_reward=args.goal_reward,
                obstacle_penalty=args.obstacle_penalty, gamma=args.gamma)


def cmd_bench(args) -> int:
    cfg = _config(args)
    if args.maps:
        grids = [(m, _load(m)) for m in args.maps]
    else:
        grids = [(f"grid{n}x{n}", benchmark_grid(n, args.seed)) for n in args.sizes]
    rows = bench_rows(grids, args.solvers, _model_kwargs(args), cfg, args.jobs)
    _emit_csv(rows, BENCH_COLUMNS, args.out)
    return 0 if all(r["converged"] == "true" for r in rows) else 1


def sweep_rows(mdp, cfg: SolverConfig, p_values, repeats=1) -> list[dict]:
    rows = []
    for p in p_values:
        if p < 1:
            raise UsageError("p values must be positive integers")
        run_cfg = SolverConfig(**{**cfg.__dict__, "mfpt_period": p})
        best = None
        for _ in range(max(1, repeats)):
            result = run_solver("mfpt-vi", mdp, run_cfg)
            if best is None or result.trace.total_ms < best.trace.total_ms:
                best = result
        rows.append({"p": p, "iterations": best.iterations, "total_ms": best.trace.total_ms,
                     "converged": str(best.converged).lower(),
                     "policy_hash": f"{policy_hash(best.policy):016x}"})
    fastest = min(range(len(rows)), key=lambda i: rows[i]["total_ms"])
    for i, row in enumerate(rows):
        row["best"] = int(i == fastest)
        row["total_ms"] = ms(row["total_ms"])
    return rows


def cmd_sweep(args) -> int:
    if not args.p_values:
        raise UsageError("need at least one p value")
    mdp = _model(_load(args.map), args)
    rows = sweep_rows(mdp, _config(args), args.p_values, args.repeats)
    _emit_csv(rows, ["p", "iterations", "total_ms", "converged", "policy_hash", "best"], args.out)
    best = next(r for r in rows if r["best"])
    print(f"fastest p={best['p']} ({best['total_ms']} ms)", file=sys.stderr)
    return 0 if all(r["converged"] == "true" for r in rows) else 1


COMMANDS = {"solve": cmd_solve, "landscape": cmd_landscape, "bench": cmd_bench, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"reachmdp {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
