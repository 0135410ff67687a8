"""Random absorbing MDPs and chains for property tests and experiments."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .mdp import MarkovChain, Mdp


def _sparse_row(rng, n, must_include, branching):
    k = int(rng.integers(1, branching + 1))
    succ = set(rng.choice(n, size=min(k, n), replace=False).tolist())
    succ.add(int(must_include))
    succ = sorted(succ)
    return succ, rng.dirichlet(np.ones(len(succ)))


def _ladder(rng, n, goals):
    """Random order with goals first; each other state gets a parent earlier in it."""
    rest = [s for s in rng.permutation(n).tolist() if s not in goals]
    order = sorted(goals) + rest
    pos = {s: i for i, s in enumerate(order)}
    return {s: order[int(rng.integers(0, pos[s]))] for s in rest}


def random_absorbing_mdp(rng, num_states: int, num_actions: int, gamma: float = 0.9,
                         num_goals: int = 1, branching: int = 3, reward_scale: float = 1.0) -> Mdp:
    """Sparse random MDP in which action 0 alone already reaches a goal from every state."""
    goals = set(rng.choice(num_states, size=num_goals, replace=False).tolist())
    parent = _ladder(rng, num_states, goals)
    entries = []
    for s in range(num_states):
        if s in goals:
            continue
        for a in range(num_actions):
            anchor = parent[s] if a == 0 else int(rng.integers(num_states))
            succ, p = _sparse_row(rng, num_states, anchor, branching)
            for j, pj in zip(succ, p):
                entries.append((s, a, j, pj, reward_scale * rng.standard_normal()))
    return Mdp.from_triples(num_states, num_actions, entries, gamma, goals)


def random_absorbing_chain(rng, num_states: int, branching: int = 3, goal: int | None = None):
    """Chain where every state reaches ``goal`` with probability one; returns ``(chain, goal)``."""
    goal = int(rng.integers(num_states)) if goal is None else goal
    parent = _ladder(rng, num_states, {goal})
    P = np.zeros((num_states, num_states))
    P[goal, goal] = 1.0
    for s, par in parent.items():
        succ, p = _sparse_row(rng, num_states, par, branching)
        P[s, succ] = p
    return MarkovChain(sp.csr_matrix(P)), goal
