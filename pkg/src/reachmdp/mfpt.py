"""Mean first passage times to a goal and the reachability landscape built from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NoConvergence, SingularMatrix
from .linsolve import solve, solve_iterative
from .mdp import MarkovChain, backward_reachable

MFPT_MAX = 1e9


@dataclass(frozen=True)
class MfptAccuracy:
    """``method="direct"`` uses sparse LU; ``"fast"`` uses Gauss-Seidel to ``tol``."""

    method: str = "direct"
    tol: float = 1e-3
    max_sweeps: int = 20_000

    def __post_init__(self):
        if self.method not in ("direct", "fast"):
            raise ValueError(f"unknown MFPT accuracy method {self.method!r}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


DIRECT = MfptAccuracy()


def fast(tol: float = 1e-3) -> MfptAccuracy:
    return MfptAccuracy("fast", tol)


@dataclass(frozen=True, eq=False)
class ReachabilityLandscape:
    mfpt: np.ndarray
    goals: tuple[int, ...]
    sentinel: float = MFPT_MAX

    @property
    def goal(self) -> int:
        return self.goals[0]

    @property
    def finite(self) -> np.ndarray:
        return self.mfpt != self.sentinel

    def __len__(self):
        return len(self.mfpt)


def build_mfpt_system(chain: MarkovChain, goal: int):
    """The first-step system ``(P~ - I) mu = -1`` over the non-goal states.

    ``P~`` is the chain with the goal's row and column removed.  Returns the
    matrix, the right-hand side and ``index_map`` (compressed index -> state).
    """
    n = chain.num_states
    index_map = np.delete(np.arange(n), goal)
    P = chain.probs.tocsr()[index_map][:, index_map]
    A = (P - sp.identity(n - 1, format="csr")).tocsr()
    A.eliminate_zeros()
    return A, -np.ones(n - 1), index_map


def almost_sure_mask(chain: MarkovChain, goal) -> np.ndarray:
    """States that hit ``goal`` (a state or set of states) with probability one.

    A state misses with positive probability exactly when it can reach some
    state that has no path to the goal at all.
    """
    goals = np.atleast_1d(goal)
    rev = chain.probs.T.tocsr()
    can_reach = backward_reachable(rev, goals)
    doomed = backward_reachable(rev, np.flatnonzero(~can_reach))
    return ~doomed


def compute_mfpt(chain: MarkovChain, goal: int, accuracy: MfptAccuracy = DIRECT) -> ReachabilityLandscape:
    """MFPT from every state to ``goal``.

    States that do not reach the goal almost surely, or whose solved value
    comes out negative or non-finite, get the ``MFPT_MAX`` sentinel.
    """
    n = chain.num_states
    goal = int(goal)
    mu = np.full(n, MFPT_MAX)
    mu[goal] = 0.0
    A, b, index_map = build_mfpt_system(chain, goal)
    # restrict to the well-posed block; the rest of the system is singular
    keep = almost_sure_mask(chain, goal)[index_map]
    if keep.any():
        sub = A[keep][:, keep]
        try:
            if accuracy.method == "direct":
                x = solve(sub, b[keep])
            else:
                try:
                    x = solve_iterative(sub, b[keep], accuracy.tol, accuracy.max_sweeps)
                except NoConvergence:
                    x = solve(sub, b[keep])
        except SingularMatrix:
            x = np.full(int(keep.sum()), np.nan)
        x = np.where(np.isfinite(x) & (x >= 0.0), x, MFPT_MAX)
        mu[index_map[keep]] = x
    return ReachabilityLandscape(mu, (goal,))


def multi_goal_landscape(chain: MarkovChain, goals, accuracy: MfptAccuracy = DIRECT) -> ReachabilityLandscape:
    """Per-state minimum over the single-goal landscapes; every goal maps to 0."""
    goals = tuple(sorted({int(g) for g in goals}))
    if not goals:
        raise ValueError("need at least one goal")
    parts = [compute_mfpt(chain, g, accuracy).mfpt for g in goals]
    mu = np.min(parts, axis=0)
    mu[list(goals)] = 0.0
    return ReachabilityLandscape(mu, goals)


def landscape_for(chain: MarkovChain, goals, accuracy: MfptAccuracy = DIRECT) -> ReachabilityLandscape:
    goals = tuple(goals)
    if len(goals) == 1:
        return compute_mfpt(chain, goals[0], accuracy)
    return multi_goal_landscape(chain, goals, accuracy)


def rank_states_by_mfpt(landscape: ReachabilityLandscape) -> np.ndarray:
    """States in ascending MFPT order; ties by state id, sentinel states last."""
    key = np.where(landscape.finite, landscape.mfpt, np.inf)
    return np.argsort(key, kind="stable").astype(np.int64)


def clip_landscape(landscape: ReachabilityLandscape, clip: float = 100.0) -> np.ndarray:
    if clip <= 0:
        raise ValueError("clip must be positive")
    return np.where(landscape.finite, np.minimum(landscape.mfpt, clip), clip)
