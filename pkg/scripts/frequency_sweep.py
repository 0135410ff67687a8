"""MFPT-VI runtime and iterations as the landscape recomputation period p varies.

    python3 scripts/frequency_sweep.py --map maps/grid50.txt --repeats 3
"""

import argparse
from dataclasses import dataclass

from reachmdp.cli import sweep_rows
from reachmdp.gridworld import NoiseModel, build_mdp_2d, load_grid
from reachmdp.solvers import SolverConfig


@dataclass
class Sweep:
    map_path: str = "maps/grid50.txt"
    p_max: int = 10
    epsilon: float = 1e-6
    eta: float = 0.1
    gamma: float = 0.95
    repeats: int = 1


def run(sweep: Sweep) -> list[dict]:
    mdp = build_mdp_2d(load_grid(sweep.map_path), NoiseModel(sweep.eta), gamma=sweep.gamma)
    return sweep_rows(mdp, SolverConfig(epsilon=sweep.epsilon), range(1, sweep.p_max + 1), sweep.repeats)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--map", default=Sweep.map_path)
    p.add_argument("--p-max", type=int, default=Sweep.p_max)
    p.add_argument("--epsilon", type=float, default=Sweep.epsilon)
    p.add_argument("--eta", type=float, default=Sweep.eta)
    p.add_argument("--repeats", type=int, default=Sweep.repeats)
    args = p.parse_args()
    rows = run(Sweep(args.map, args.p_max, args.epsilon, args.eta, repeats=args.repeats))
    print(f"{'p':>3} {'iters':>6} {'ms':>10}  policy_hash")
    for r in rows:
        mark = "  <- fastest" if r["best"] else ""
        print(f"{r['p']:>3} {r['iterations']:>6} {r['total_ms']:>10}  {r['policy_hash']}{mark}")


if __name__ == "__main__":
    main()
