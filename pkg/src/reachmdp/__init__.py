"""Absorbing MDP solvers driven by mean-first-passage-time reachability landscapes."""

from .errors import DimensionError, InvalidModel, NoConvergence, SingularMatrix, ZeroDiagonal
from .formats import policy_hash
from .gridworld import (
    GridMap,
    NoiseModel,
    benchmark_grid,
    build_mdp,
    build_mdp_2d,
    build_mdp_3d,
    load_grid,
    parse_grid,
    rollout_policy,
)
from .linsolve import solve, solve_iterative
from .mdp import (
    MarkovChain,
    Mdp,
    bellman_backup,
    bellman_operator,
    check_absorbing,
    greedy_policy,
    induced_chain,
    policy_mismatch,
    validate_mdp,
    value_residual,
)
from .mfpt import (
    DIRECT,
    MFPT_MAX,
    MfptAccuracy,
    ReachabilityLandscape,
    build_mfpt_system,
    clip_landscape,
    compute_mfpt,
    fast,
    multi_goal_landscape,
    rank_states_by_mfpt,
)
from .solvers import (
    SOLVERS,
    ConvergenceTrace,
    SolveResult,
    SolverConfig,
    mfpt_pi,
    mfpt_policy_update,
    mfpt_vi,
    policy_evaluation_iterative,
    policy_evaluation_linear,
    policy_iteration,
    policy_iteration_le,
    run_solver,
    value_iteration,
    vi_prioritized_sweeping,
)

__version__ = "0.1.0"
