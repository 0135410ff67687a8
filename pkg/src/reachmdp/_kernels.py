"""Numba kernels for the in-place sweeps; they take raw CSR arrays."""

import numpy as np
from numba import njit


@njit(cache=True)
def bellman_sweep(indptr, indices, probs, exp_rewards, num_actions, gamma, V, order, deltas):
    """In-place Bellman backups over ``order``; writes |dV| into ``deltas``, returns the max."""
    worst = 0.0
    for s in order:
        best = -np.inf
        base = s * num_actions
        for a in range(num_actions):
            row = base + a
            acc = 0.0
            for jj in range(indptr[row], indptr[row + 1]):
                acc += probs[jj] * V[indices[jj]]
            q = exp_rewards[row] + gamma * acc
            if q > best:
                best = q
        d = abs(best - V[s])
        V[s] = best
        deltas[s] = d
        if d > worst:
            worst = d
    return worst


@njit(cache=True)
def policy_sweep(indptr, indices, probs, exp_rewards, num_actions, gamma, policy, V):
    """In-place fixed-policy backups in state order; returns max |dV|."""
    worst = 0.0
    for s in range(V.shape[0]):
        row = s * num_actions + policy[s]
        acc = 0.0
        for jj in range(indptr[row], indptr[row + 1]):
            acc += probs[jj] * V[indices[jj]]
        v = exp_rewards[row] + gamma * acc
        d = abs(v - V[s])
        V[s] = v
        if d > worst:
            worst = d
    return worst


@njit(cache=True)
def gauss_seidel_sweep(indptr, indices, data, diag, b, x):
    for i in range(x.shape[0]):
        acc = b[i]
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            if j != i:
                acc -= data[jj] * x[j]
        x[i] = acc / diag[i]
