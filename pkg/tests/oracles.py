"""Brute-force reference computations, independent of the recursions under test."""

import itertools

import numpy as np


def brute_force_counts(y, point):
    """Posterior-expected counts by enumerating every hidden path."""
    A, C, pi = point.A, point.C, point.pi
    obs = y.index
    M, T, N = point.n_states, len(obs), point.n_symbols
    wpi = np.zeros(M)
    WA = np.zeros((M, M))
    WC = np.zeros((N, M))
    Z = 0.0
    for path in itertools.product(range(M), repeat=T):
        w = pi[path[0]] * C[obs[0], path[0]]
        for t in range(1, T):
            w *= A[path[t], path[t - 1]] * C[obs[t], path[t]]
        Z += w
        wpi[path[0]] += w
        for t in range(1, T):
            WA[path[t], path[t - 1]] += w
        for t in range(T):
            WC[obs[t], path[t]] += w
    return wpi / Z, WA / Z, WC / Z, np.log(Z)
