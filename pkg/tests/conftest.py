"""Independent brute-force oracles shared by the test modules.

These deliberately avoid the package's transforms: everything is computed
from the definitions by explicit subset or permutation loops.
"""

import itertools
from math import comb, factorial

import numpy as np
import pytest

from metagame import MaskedModel
from metagame.zoo import random_sparse_polynomial


def subsets(bits):
    """All sub-bitmasks of ``bits``."""
    sub = bits
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & bits


def naive_mobius(table):
    n = len(table)
    return np.array([sum((-1) ** (bin(S).count("1") - bin(T).count("1")) * table[T] for T in subsets(S))
                     for S in range(n)])


def permutation_shapley(table):
    d = len(table).bit_length() - 1
    phi = np.zeros(d)
    perms = list(itertools.permutations(range(d)))
    for perm in perms:
        S = 0
        for p in perm:
            phi[p] += table[S | 1 << p] - table[S]
            S |= 1 << p
    return phi / len(perms)


def delta2(table, S, i, j):
    return table[S | 1 << i | 1 << j] - table[S | 1 << i] - table[S | 1 << j] + table[S]


def stii_oracle(table):
    """Order-2 Shapley-Taylor index from its discrete-derivative definition."""
    d = len(table).bit_length() - 1
    singles = np.array([table[1 << i] - table[0] for i in range(d)])
    pairs = np.zeros((d, d))
    for i, j in itertools.combinations(range(d), 2):
        rest = [k for k in range(d) if k not in (i, j)]
        total = 0.0
        for r in range(len(rest) + 1):
            for T in itertools.combinations(rest, r):
                S = sum(1 << k for k in T)
                total += 2.0 / (d * comb(d - 1, r)) * delta2(table, S, i, j)
        pairs[i, j] = pairs[j, i] = total
    return singles, pairs


def sii_pair_oracle(table):
    """Pairwise Shapley interaction index from the discrete-derivative definition."""
    d = len(table).bit_length() - 1
    pairs = np.zeros((d, d))
    for i, j in itertools.combinations(range(d), 2):
        rest = [k for k in range(d) if k not in (i, j)]
        total = 0.0
        for r in range(len(rest) + 1):
            w = factorial(r) * factorial(d - r - 2) / factorial(d - 1)
            for T in itertools.combinations(rest, r):
                total += w * delta2(table, sum(1 << k for k in T), i, j)
        pairs[i, j] = pairs[j, i] = total
    return pairs


def fsii_oracle(table):
    """Order-2 faithful index as the kernel-weighted least-squares fit with exact endpoints."""
    d = len(table).bit_length() - 1
    feats = [()] + [(i,) for i in range(d)] + list(itertools.combinations(range(d), 2))
    X = np.array([[all(S >> k & 1 for k in f) for f in feats] for S in range(1 << d)], dtype=float)
    y = np.asarray(table, dtype=float)
    inner = np.arange(1, (1 << d) - 1)
    sizes = np.array([bin(S).count("1") for S in inner])
    w = (d - 1) / (np.array([comb(d, s) for s in sizes]) * sizes * (d - sizes))
    Xi, yi = X[inner] * np.sqrt(w)[:, None], y[inner] * np.sqrt(w)
    ends = [0, (1 << d) - 1]
    p = len(feats)
    kkt = np.zeros((p + 2, p + 2))
    kkt[:p, :p] = 2 * Xi.T @ Xi
    kkt[:p, p:] = X[ends].T
    kkt[p:, :p] = X[ends]
    rhs = np.concatenate([2 * Xi.T @ yi, y[ends]])
    beta = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:p]
    singles = beta[1:d + 1]
    pairs = np.zeros((d, d))
    for coef, f in zip(beta[d + 1:], feats[d + 1:]):
        pairs[f[0], f[1]] = pairs[f[1], f[0]] = coef
    return singles, pairs


def restricted_table(table, S):
    """Table of the subgame on coalition ``S`` (players outside ``S`` fixed absent), full-size indexing."""
    return np.array([table[T & S] for T in range(len(table))])


def random_masked(seed, d, zero_baseline=False):
    rng = np.random.default_rng([seed, d, 17])
    model = random_sparse_polynomial(d, min(3, d), d + 2, seed=int(rng.integers(2 ** 32)))
    x = rng.uniform(-1.5, 1.5, size=d)
    b = np.zeros(d) if zero_baseline else rng.uniform(-0.5, 0.5, size=d)
    return MaskedModel(model, x, b)


@pytest.fixture
def table1_masked():
    from metagame import table1_model

    return MaskedModel(table1_model(), [2.0, 3.0], [0.0, 0.0])
