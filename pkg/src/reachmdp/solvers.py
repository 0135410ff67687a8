"""The six solvers: VI, VI-PS, MFPT-VI, PI, PI-LE and MFPT-PI.

Every value-iteration variant sweeps in place (Gauss-Seidel), so the order in
which states are visited changes how far information travels per sweep.  The
variants differ only in that order.  Policy-iteration variants differ in how
a policy is evaluated and how the next one is proposed.
"""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .linsolve import solve
from .mdp import Mdp, greedy_policy, induced_chain, policy_mismatch, policy_rows, q_values
from .mfpt import DIRECT, MfptAccuracy, ReachabilityLandscape, landscape_for, rank_states_by_mfpt

log = logging.getLogger(__name__)

COMPONENTS = ("bellman", "policy_evaluation", "policy_improvement", "mfpt", "sort")

LandscapeHook = Callable[[int, ReachabilityLandscape], None]


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs.

    ``gamma=None`` means use the model's own discount.  ``mfpt_period`` is the
    MFPT-VI recomputation interval; ``pi_mfpt_period`` the same for MFPT-PI.
    """

    gamma: float | None = None
    epsilon: float = 1e-6
    mfpt_period: int = 3
    pi_mfpt_period: int = 1
    mfpt_accuracy: MfptAccuracy = DIRECT
    max_iterations: int = 1000
    max_eval_sweeps: int = 100_000

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.mfpt_period < 1 or self.pi_mfpt_period < 1:
            raise ValueError("MFPT periods must be >= 1")
        if self.max_iterations < 1 or self.max_eval_sweeps < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.gamma is not None and not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")

    def discount(self, mdp: Mdp) -> float:
        return mdp.discount if self.gamma is None else self.gamma


@dataclass
class IterationRecord:
    iteration: int
    delta: float
    cumulative_ms: float
    bellman_ms: float = 0.0
    policy_evaluation_ms: float = 0.0
    policy_improvement_ms: float = 0.0
    mfpt_ms: float = 0.0
    sort_ms: float = 0.0


@dataclass
class ConvergenceTrace:
    solver: str
    records: list[IterationRecord] = field(default_factory=list)
    status: str = "running"

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def deltas(self) -> list[float]:
        return [r.delta for r in self.records]

    @property
    def total_ms(self) -> float:
        return self.records[-1].cumulative_ms if self.records else 0.0

    def component_totals(self) -> dict[str, float]:
        return {c: sum(getattr(r, f"{c}_ms") for r in self.records) for c in COMPONENTS}


@dataclass
class SolveResult:
    values: np.ndarray
    policy: np.ndarray
    trace: ConvergenceTrace

    @property
    def iterations(self) -> int:
        return self.trace.iterations

    @property
    def converged(self) -> bool:
        return self.trace.converged


class _Clock:
    """Per-iteration component timer on the monotonic clock."""

    def __init__(self, trace: ConvergenceTrace):
        self.trace = trace
        self.start = time.perf_counter()
        self.parts = dict.fromkeys(COMPONENTS, 0.0)

    @contextmanager
    def time(self, component: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.parts[component] += (time.perf_counter() - t0) * 1e3

    def record(self, iteration: int, delta: float):
        now = (time.perf_counter() - self.start) * 1e3
        rec = IterationRecord(iteration, float(delta), now, *(self.parts[c] for c in COMPONENTS))
        self.trace.records.append(rec)
        self.parts = dict.fromkeys(COMPONENTS, 0.0)


def _sweep_args(mdp: Mdp):
    return mdp.indptr, mdp.indices, mdp.probs, mdp.expected_rewards, mdp.num_actions


def _vi_loop(mdp: Mdp, cfg: SolverConfig, name: str, choose_order) -> SolveResult:
    """Shared Gauss-Seidel VI loop; ``choose_order(k, V, deltas, clock)`` picks sweep ``k``'s order."""
    gamma = cfg.discount(mdp)
    args = _sweep_args(mdp)
    V = np.zeros(mdp.num_states)
    deltas = np.zeros(mdp.num_states)
    trace = ConvergenceTrace(name)
    clock = _Clock(trace)
    for k in range(cfg.max_iterations):
        order = choose_order(k, V, deltas, clock)
        with clock.time("bellman"):
            delta = _kernels.bellman_sweep(*args, gamma, V, order, deltas)
        clock.record(k, delta)
        if delta <= cfg.epsilon:
            trace.status = "converged"
            break
    else:
        trace.status = "iteration-capped"
        log.warning("%s hit the iteration cap (%d)", name, cfg.max_iterations)
    return SolveResult(V, greedy_policy(mdp, V, gamma), trace)


def value_iteration(mdp: Mdp, cfg: SolverConfig = SolverConfig()) -> SolveResult:
    order = np.arange(mdp.num_states, dtype=np.int64)
    return _vi_loop(mdp, cfg, "vi", lambda k, V, deltas, clock: order)


def vi_prioritized_sweeping(mdp: Mdp, cfg: SolverConfig = SolverConfig()) -> SolveResult:
    """VI visiting states by descending value change of the previous sweep."""
    index_order = np.arange(mdp.num_states, dtype=np.int64)

    def choose(k, V, deltas, clock):
        if k == 0:
            return index_order
        with clock.time("sort"):
            return np.argsort(-deltas, kind="stable").astype(np.int64)

    return _vi_loop(mdp, cfg, "vi-ps", choose)


def mfpt_vi(mdp: Mdp, cfg: SolverConfig = SolverConfig(), on_landscape: LandscapeHook | None = None) -> SolveResult:
    """VI visiting states in ascending MFPT to the goal.

    Every ``cfg.mfpt_period`` sweeps the landscape is recomputed on the chain
    induced by the greedy policy of the current values; between
    recomputations the last order is reused.
    """
    if not mdp.goal_states:
        raise ValueError("MFPT-VI needs at least one goal state")
    gamma = cfg.discount(mdp)
    state = {"order": np.arange(mdp.num_states, dtype=np.int64)}

    def choose(k, V, deltas, clock):
        if k % cfg.mfpt_period == 0:
            with clock.time("mfpt"):
                chain = induced_chain(mdp, greedy_policy(mdp, V, gamma))
                landscape = landscape_for(chain, mdp.goal_states, cfg.mfpt_accuracy)
            if on_landscape is not None:
                on_landscape(k, landscape)
            with clock.time("sort"):
                state["order"] = rank_states_by_mfpt(landscape)
        return state["order"]

    return _vi_loop(mdp, cfg, "mfpt-vi", choose)


def _evaluate_iterative(mdp, policy, gamma, epsilon, max_sweeps, V0=None):
    pi = np.asarray(policy, dtype=np.int64)
    policy_rows(mdp, pi)
    V = np.zeros(mdp.num_states) if V0 is None else np.array(V0, dtype=float)
    args = _sweep_args(mdp)
    for sweep in range(1, max_sweeps + 1):
        if _kernels.policy_sweep(*args, gamma, pi, V) <= epsilon:
            return V, sweep, True
    log.warning("policy evaluation hit the sweep cap (%d)", max_sweeps)
    return V, max_sweeps, False


def policy_evaluation_iterative(mdp: Mdp, policy, cfg: SolverConfig = SolverConfig(), initial=None) -> np.ndarray:
    """Fixed-policy in-place backups until successive sweeps differ by at most epsilon."""
    V, _, _ = _evaluate_iterative(mdp, policy, cfg.discount(mdp), cfg.epsilon, cfg.max_eval_sweeps, initial)
    return V


def policy_evaluation_linear(mdp: Mdp, policy, gamma: float | None = None) -> np.ndarray:
    """Solve ``(I - gamma P_pi) V = r_pi`` directly."""
    gamma = mdp.discount if gamma is None else gamma
    rows = policy_rows(mdp, policy)
    P = mdp.transition_matrix[rows]
    r = mdp.expected_rewards[rows]
    A = sp.identity(mdp.num_states, format="csr") - gamma * P
    return solve(A, r)


def _initial_policy(mdp, initial_policy):
    if initial_policy is None:
        return np.zeros(mdp.num_states, dtype=np.int64)
    pi = np.array(initial_policy, dtype=np.int64)
    policy_rows(mdp, pi)
    return pi


def _pi_loop(mdp, cfg, name, evaluate, propose, initial_policy):
    """Evaluate / propose until the proposal equals the evaluated policy.

    ``delta`` per round is the number of states whose action changed.
    """
    pi = _initial_policy(mdp, initial_policy)
    V = np.zeros(mdp.num_states)
    trace = ConvergenceTrace(name)
    clock = _Clock(trace)
    for k in range(cfg.max_iterations):
        with clock.time("policy_evaluation"):
            V = evaluate(pi, V)
        nxt = propose(k, pi, V, clock)
        delta = policy_mismatch(pi, nxt)
        clock.record(k, delta)
        if delta == 0:
            trace.status = "converged"
            break
        pi = nxt
    else:
        trace.status = "iteration-capped"
        log.warning("%s hit the iteration cap (%d)", name, cfg.max_iterations)
        with clock.time("policy_evaluation"):
            V = evaluate(pi, V)
    return SolveResult(V, pi, trace)


def _greedy_proposal(mdp, gamma):
    def propose(k, pi, V, clock):
        with clock.time("policy_improvement"):
            return greedy_policy(mdp, V, gamma)
    return propose


def policy_iteration(mdp: Mdp, cfg: SolverConfig = SolverConfig(), initial_policy=None) -> SolveResult:
    gamma = cfg.discount(mdp)

    def evaluate(pi, V):
        return _evaluate_iterative(mdp, pi, gamma, cfg.epsilon, cfg.max_eval_sweeps, V)[0]

    return _pi_loop(mdp, cfg, "pi", evaluate, _greedy_proposal(mdp, gamma), initial_policy)


def policy_iteration_le(mdp: Mdp, cfg: SolverConfig = SolverConfig(), initial_policy=None) -> SolveResult:
    gamma = cfg.discount(mdp)

    def evaluate(pi, V):
        return policy_evaluation_linear(mdp, pi, gamma)

    return _pi_loop(mdp, cfg, "pi-le", evaluate, _greedy_proposal(mdp, gamma), initial_policy)


def mfpt_policy_update(mdp: Mdp, landscape: ReachabilityLandscape) -> np.ndarray:
    """Per state, the action minimizing the expected MFPT of the successor."""
    mu = np.asarray(landscape.mfpt, dtype=float)
    expected = (mdp.transition_matrix @ mu).reshape(mdp.num_states, mdp.num_actions)
    pi = np.argmin(expected, axis=1).astype(np.int64)
    pi[list(mdp.goal_states)] = 0
    return pi


def mfpt_pi(mdp: Mdp, cfg: SolverConfig = SolverConfig(), initial_policy=None,
            on_landscape: LandscapeHook | None = None) -> SolveResult:
    """Policy iteration whose proposal step follows the reachability landscape.

    Each round evaluates the current policy by in-place sweeps, takes the
    value-greedy policy, builds the landscape of the chain that policy induces
    and proposes the MFPT-greedy action.  The MFPT action is kept at a state
    when its backed-up value is within ``epsilon`` of the greedy action's
    (closer than the evaluation can resolve), otherwise the greedy action is
    used.  An incumbent action that is already within ``epsilon`` of the best
    is only replaced by a strictly better one.  Stops when a round proposes
    the policy it just evaluated, which is then greedy (to within
    ``epsilon``) with respect to its own values.
    """
    if not mdp.goal_states:
        raise ValueError("MFPT-PI needs at least one goal state")
    gamma = cfg.discount(mdp)
    states = np.arange(mdp.num_states)
    cache: dict[str, ReachabilityLandscape] = {}

    def evaluate(pi, V):
        return _evaluate_iterative(mdp, pi, gamma, cfg.epsilon, cfg.max_eval_sweeps, V)[0]

    def propose(k, pi, V, clock):
        with clock.time("policy_improvement"):
            Q = q_values(mdp, V, gamma)
            improved = np.argmax(Q, axis=1)
        if k % cfg.pi_mfpt_period == 0 or "landscape" not in cache:
            with clock.time("mfpt"):
                cache["landscape"] = landscape_for(
                    induced_chain(mdp, improved), mdp.goal_states, cfg.mfpt_accuracy
                )
            if on_landscape is not None:
                on_landscape(k, cache["landscape"])
        with clock.time("policy_improvement"):
            guided = mfpt_policy_update(mdp, cache["landscape"])
            best = Q[states, improved]
            close = Q[states, guided] >= best - cfg.epsilon
            nxt = np.where(close, guided, improved)
            # a near-best incumbent only yields to a strictly better action; without
            # this, approximate evaluations can flip near-tied states forever
            incumbent = Q[states, pi]
            nxt = np.where((incumbent >= best - cfg.epsilon) & (incumbent >= Q[states, nxt]), pi, nxt)
        return nxt.astype(np.int64)

    return _pi_loop(mdp, cfg, "mfpt-pi", evaluate, propose, initial_policy)


SOLVERS = {
    "vi": value_iteration,
    "vi-ps": vi_prioritized_sweeping,
    "mfpt-vi": mfpt_vi,
    "pi": policy_iteration,
    "pi-le": policy_iteration_le,
    "mfpt-pi": mfpt_pi,
}


def run_solver(name: str, mdp: Mdp, cfg: SolverConfig = SolverConfig(), **kwargs) -> SolveResult:
    try:
        fn = SOLVERS[name]
    except KeyError:
        raise ValueError(f"unknown solver {name!r}; choose from {', '.join(SOLVERS)}") from None
    return fn(mdp, cfg, **kwargs)

