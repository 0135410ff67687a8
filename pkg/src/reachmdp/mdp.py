"""MDP data model and the Bellman operators built on it.

An :class:`Mdp` stores its transition function as one CSR block with a row
per ``(state, action)`` pair (row ``s * num_actions + a``).  Rewards live on
the same sparsity pattern, one per ``(s, a, s')`` entry.  Policies and value
functions are plain numpy arrays of length ``num_states``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order

from .errors import DimensionError, InvalidModel

PROB_TOL = 1e-9
RENORMALIZE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Mdp:
    """Immutable absorbing MDP in per-(state, action) CSR layout.

    The constructor stores arrays as given; use :meth:`from_triples` or
    :meth:`from_dense` to get normalized, goal-absorbing models, and
    :func:`validate_mdp` to audit a hand-built one.
    """

    num_states: int
    num_actions: int
    indptr: np.ndarray
    indices: np.ndarray
    probs: np.ndarray
    rewards: np.ndarray
    discount: float
    goal_states: tuple[int, ...]
    action_names: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        for name in ("indptr", "indices", "probs", "rewards"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "goal_states", tuple(int(g) for g in self.goal_states))

    @classmethod
    def from_triples(
        cls,
        num_states: int,
        num_actions: int,
        entries: Iterable[tuple[int, int, int, float, float]],
        discount: float,
        goal_states: Iterable[int],
        action_names: Iterable[str] | None = None,
    ) -> "Mdp":
        """Build from ``(s, a, s_next, prob, reward)`` tuples.

        Duplicate successors are merged (rewards probability-weighted), zero
        entries dropped, rows within 1e-6 of stochastic renormalized, and goal
        rows replaced by a zero-reward self-loop.  Raises :class:`InvalidModel`
        for anything else that is wrong.
        """
        n, m = int(num_states), int(num_actions)
        if n < 1 or m < 1:
            raise InvalidModel("need at least one state and one action")
        if not 0.0 <= discount <= 1.0:
            raise InvalidModel(f"discount {discount} outside [0, 1]")
        goals = sorted({int(g) for g in goal_states})
        if not goals:
            raise InvalidModel("at least one goal state is required")
        if goals[0] < 0 or goals[-1] >= n:
            raise InvalidModel(f"goal state out of range: {goals}")
        goal_set = set(goals)

        rows: list[dict[int, list[float]]] = [dict() for _ in range(n * m)]
        for s, a, s2, p, r in entries:
            s, a, s2 = int(s), int(a), int(s2)
            if not (0 <= s < n and 0 <= a < m and 0 <= s2 < n):
                raise InvalidModel(f"index out of range in entry {(s, a, s2)}")
            if p < 0.0 or p > 1.0 + RENORMALIZE_TOL:
                raise InvalidModel(f"probability {p} out of range at {(s, a, s2)}")
            if p == 0.0 or s in goal_set:
                continue
            acc = rows[s * m + a].setdefault(s2, [0.0, 0.0])
            acc[0] += p
            acc[1] += p * r

        indptr = np.zeros(n * m + 1, dtype=np.int64)
        indices: list[int] = []
        probs: list[float] = []
        rewards: list[float] = []
        for row in range(n * m):
            s, a = divmod(row, m)
            if s in goal_set:
                succ = [(s, 1.0, 0.0)]
            else:
                acc = rows[row]
                total = sum(v[0] for v in acc.values())
                if abs(total - 1.0) > RENORMALIZE_TOL:
                    raise InvalidModel(f"row (state={s}, action={a}) sums to {total}")
                succ = [(j, v[0] / total, v[1] / v[0]) for j, v in sorted(acc.items())]
            for j, p, r in succ:
                indices.append(j)
                probs.append(p)
                rewards.append(r)
            indptr[row + 1] = len(indices)
        return cls(
            n, m, indptr,
            np.asarray(indices, dtype=np.int64),
            np.asarray(probs, dtype=float),
            np.asarray(rewards, dtype=float),
            float(discount), tuple(goals),
            tuple(action_names) if action_names is not None else None,
        )

    @classmethod
    def from_dense(cls, transitions, rewards, discount, goal_states, action_names=None) -> "Mdp":
        """Build from arrays ``T[s, a, s']`` and ``R[s, a, s']`` (or ``R[s, a]``)."""
        T = np.asarray(transitions, dtype=float)
        if T.ndim != 3 or T.shape[0] != T.shape[2]:
            raise DimensionError(f"transitions must have shape (n, m, n), got {T.shape}")
        R = np.asarray(rewards, dtype=float)
        if R.shape == T.shape[:2]:
            R = np.broadcast_to(R[:, :, None], T.shape)
        if R.shape != T.shape:
            raise DimensionError(f"rewards shape {R.shape} does not match {T.shape}")
        n, m, _ = T.shape
        s, a, s2 = np.nonzero(T)
        entries = zip(s, a, s2, T[s, a, s2], R[s, a, s2])
        return cls.from_triples(n, m, entries, discount, goal_states, action_names)

    @cached_property
    def transition_matrix(self) -> sp.csr_matrix:
        """``(n*m, n)`` CSR matrix whose row ``s*m + a`` is ``T_a(s, .)``."""
        return sp.csr_matrix(
            (self.probs, self.indices, self.indptr),
            shape=(self.num_states * self.num_actions, self.num_states),
        )

    @cached_property
    def expected_rewards(self) -> np.ndarray:
        """Per-(s, a) expected immediate reward, ``sum_s' T * R``, flattened."""
        counts = np.diff(self.indptr)
        rows = np.repeat(np.arange(self.num_states * self.num_actions), counts)
        out = np.zeros(self.num_states * self.num_actions)
        np.add.at(out, rows, self.probs * self.rewards)
        return out

    def successors(self, s: int, a: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        row = s * self.num_actions + a
        lo, hi = self.indptr[row], self.indptr[row + 1]
        return self.indices[lo:hi], self.probs[lo:hi], self.rewards[lo:hi]

    @property
    def goal_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_states, dtype=bool)
        mask[list(self.goal_states)] = True
        return mask


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Row-stochastic sparse matrix, usually induced by fixing a policy."""

    probs: sp.csr_matrix

    def __post_init__(self):
        P = sp.csr_matrix(self.probs, dtype=float)
        P.sum_duplicates()
        P.eliminate_zeros()
        if P.shape[0] != P.shape[1]:
            raise DimensionError(f"chain matrix must be square, got {P.shape}")
        if P.nnz and (P.data.min() < 0.0 or P.data.max() > 1.0 + PROB_TOL):
            raise InvalidModel("chain entries must lie in [0, 1]")
        sums = np.asarray(P.sum(axis=1)).ravel()
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_TOL)
        if bad.size:
            raise InvalidModel(f"rows {bad.tolist()[:10]} are not stochastic")
        object.__setattr__(self, "probs", P)

    @classmethod
    def from_dense(cls, matrix) -> "MarkovChain":
        return cls(sp.csr_matrix(np.asarray(matrix, dtype=float)))

    @property
    def num_states(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class Violation:
    kind: str
    state: int | None = None
    action: int | None = None
    detail: str = ""


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def validate_mdp(mdp: Mdp) -> ValidationReport:
    """Audit every structural invariant; violations are collected, never raised."""
    report = ValidationReport()
    add = report.violations.append
    n, m = mdp.num_states, mdp.num_actions
    if len(mdp.indptr) != n * m + 1:
        add(Violation("ShapeViolation", detail=f"indptr has length {len(mdp.indptr)}"))
        return report
    if not 0.0 <= mdp.discount <= 1.0:
        add(Violation("DiscountOutOfRange", detail=str(mdp.discount)))
    if not mdp.goal_states:
        add(Violation("NoGoalState"))
    goals = set(mdp.goal_states)
    for g in goals:
        if not 0 <= g < n:
            add(Violation("IndexOutOfRange", state=g, detail="goal state"))
    for s in range(n):
        for a in range(m):
            succ, p, _ = mdp.successors(s, a)
            if np.any((succ < 0) | (succ >= n)):
                add(Violation("IndexOutOfRange", s, a))
            if np.any(p < 0.0):
                add(Violation("NegativeProbability", s, a))
            if np.any(p > 1.0):
                add(Violation("ProbabilityAboveOne", s, a))
            if np.any(p == 0.0):
                add(Violation("ZeroProbabilityEntry", s, a))
            if len(np.unique(succ)) != len(succ):
                add(Violation("DuplicateSuccessor", s, a))
            total = float(p.sum())
            if abs(total - 1.0) > PROB_TOL:
                add(Violation("RowSumViolation", s, a, f"sum={total!r}"))
            if s in goals and not (len(succ) == 1 and succ[0] == s and p[0] == 1.0):
                add(Violation("GoalNotAbsorbing", s, a))
    return report


def check_absorbing(mdp: Mdp) -> bool:
    """True iff every state has a positive-probability path to some goal."""
    n, m = mdp.num_states, mdp.num_actions
    src = np.repeat(np.arange(n * m) // m, np.diff(mdp.indptr))
    keep = mdp.probs > 0
    # union of all action edges, stored reversed (successor -> source)
    rev = sp.csr_matrix(
        (np.ones(int(keep.sum())), (mdp.indices[keep], src[keep])), shape=(n, n)
    )
    return bool(backward_reachable(rev, mdp.goal_states).all())


def backward_reachable(rev: sp.csr_matrix, targets) -> np.ndarray:
    """Mask of states with a path into ``targets``, given reversed adjacency ``rev``."""
    n = rev.shape[0]
    targets = np.asarray(list(targets), dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    if targets.size == 0:
        return seen
    # virtual root n with an edge to every target
    root = sp.csr_matrix((np.ones(targets.size), (np.full(targets.size, n), targets)), shape=(n + 1, n + 1))
    graph = sp.bmat([[rev, None], [None, sp.csr_matrix((1, 1))]], format="csr") + root
    order = breadth_first_order(graph, n, directed=True, return_predecessors=False)
    seen[order[order < n]] = True
    return seen


def q_values(mdp: Mdp, values, gamma: float | None = None) -> np.ndarray:
    """Action values ``Q[s, a] = sum_s' T (R + gamma V)`` as an ``(n, m)`` array."""
    gamma = mdp.discount if gamma is None else gamma
    V = np.asarray(values, dtype=float)
    if V.shape != (mdp.num_states,):
        raise DimensionError(f"value function has shape {V.shape}, expected ({mdp.num_states},)")
    q = mdp.expected_rewards + gamma * (mdp.transition_matrix @ V)
    return q.reshape(mdp.num_states, mdp.num_actions)


def bellman_backup(mdp: Mdp, values, s: int, gamma: float | None = None) -> tuple[float, int]:
    """One Bellman backup at state ``s``: ``(max_a Q(s, a), argmax)``; ties go to the lowest action."""
    gamma = mdp.discount if gamma is None else gamma
    V = np.asarray(values, dtype=float)
    m = mdp.num_actions
    block = mdp.transition_matrix[s * m:(s + 1) * m]
    q = mdp.expected_rewards[s * m:(s + 1) * m] + gamma * (block @ V)
    a = int(np.argmax(q))
    return float(q[a]), a


def bellman_operator(mdp: Mdp, values, gamma: float | None = None) -> np.ndarray:
    """Synchronous full backup ``B(V)``."""
    return q_values(mdp, values, gamma).max(axis=1)


def greedy_policy(mdp: Mdp, values, gamma: float | None = None) -> np.ndarray:
    return np.argmax(q_values(mdp, values, gamma), axis=1).astype(np.int64)


def policy_rows(mdp: Mdp, policy) -> np.ndarray:
    pi = np.asarray(policy, dtype=np.int64)
    if pi.shape != (mdp.num_states,):
        raise DimensionError(f"policy has shape {pi.shape}, expected ({mdp.num_states},)")
    if pi.size and (pi.min() < 0 or pi.max() >= mdp.num_actions):
        raise ValueError("policy contains an invalid action index")
    return np.arange(mdp.num_states) * mdp.num_actions + pi


def induced_chain(mdp: Mdp, policy) -> MarkovChain:
    """Markov chain whose row ``s`` is ``T_{pi(s)}(s, .)``."""
    return MarkovChain(mdp.transition_matrix[policy_rows(mdp, policy)])


def value_residual(v, v_next) -> float:
    a, b = np.asarray(v, dtype=float), np.asarray(v_next, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def policy_mismatch(p1, p2) -> int:
    a, b = np.asarray(p1), np.asarray(p2)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))
