"""Budgeted Shapley estimators and approximate meta-attributions.

Two estimator families are provided: permutation sampling and Shapley-kernel
weighted least squares. Both count distinct oracle evaluations (repeated
coalitions are served from a per-run cache) and never exceed the budget.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .coalition import EvaluationCache, Game
from .exceptions import EstimationError, InvalidArgumentError
from .meta import DirectionalMatrix, MetaGameOracle, _resolve_source

#: above this many players (or when only some targets are requested) regression is the default
MC_MAX_PLAYERS = 40


@dataclass(frozen=True)
class Budget:
    max_evaluations: int
    seed: int = 0
    pairing: bool = False

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise InvalidArgumentError("budget must allow at least one evaluation")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")


@dataclass
class EstimateWithError:
    values: np.ndarray
    stderr: np.ndarray
    evaluations_used: int


def make_rng(seed: int, stream: int | None = None) -> np.random.Generator:
    """Counter-based generator; ``stream`` selects an independent sub-stream (e.g. per target)."""
    key = () if stream is None else (int(stream),)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _stderr(samples: np.ndarray) -> np.ndarray:
    n = samples.shape[0]
    if n < 2:
        return np.full(samples.shape[1], np.inf)
    return samples.std(axis=0, ddof=1) / np.sqrt(n)


def shapley_mc_permutation(oracle: Game, budget: Budget, rng: np.random.Generator | None = None) -> EstimateWithError:
    """Permutation-sampling Shapley estimate.

    Each permutation is charged ``d + 1`` evaluations (the prefix chain from the
    empty to the full coalition), so ``max_evaluations // (d + 1)`` permutations
    are drawn. With ``pairing`` each permutation is followed by its reverse and
    the pair average counts as one sample for the standard error.
    """
    d = oracle.d
    if budget.max_evaluations < d + 1:
        raise InvalidArgumentError(f"budget {budget.max_evaluations} is below one permutation ({d + 1} evaluations)")
    rng = make_rng(budget.seed) if rng is None else rng
    cache = EvaluationCache(oracle)
    n_perm = budget.max_evaluations // (d + 1)
    if budget.pairing and n_perm >= 2:
        n_perm -= n_perm % 2
    marginals = np.empty((n_perm, d))
    k = 0
    while k < n_perm:
        order = rng.permutation(d)
        orders = [order, order[::-1]] if budget.pairing and n_perm - k >= 2 else [order]
        for perm in orders:
            prefix = np.zeros(d + 1, dtype=np.int64)
            prefix[1:] = np.cumsum(1 << perm.astype(np.int64))
            vals = cache.evaluate_many(prefix)
            marginals[k, perm] = np.diff(vals)
            k += 1
    samples = marginals
    if budget.pairing and n_perm >= 2:
        samples = 0.5 * (marginals[0::2] + marginals[1::2])
    return EstimateWithError(marginals.mean(axis=0), _stderr(samples), cache.misses)


def kernel_size_weights(d: int) -> np.ndarray:
    """Sampling probabilities over coalition sizes ``1..d-1``, proportional to ``(d-1) / (s (d-s))``."""
    s = np.arange(1, d)
    w = (d - 1) / (s * (d - s))
    return w / w.sum()


def _solve_constrained(A: np.ndarray, b: np.ndarray, total: float):
    """Minimize the quadratic fit subject to ``sum(phi) = total``; returns ``phi`` and the linear map."""
    d = A.shape[0]
    if np.linalg.cond(A) > 1e12:
        raise EstimationError("regression system is singular; increase the budget")
    Ainv = np.linalg.inv(A)
    ones = np.ones(d)
    Ainv1 = Ainv @ ones
    C = Ainv - np.outer(Ainv1, Ainv1) / (ones @ Ainv1)
    phi = C @ b + Ainv1 * total / (ones @ Ainv1)
    # restore efficiency exactly after round-off
    phi += (total - phi.sum()) / d
    return phi, C


def shapley_regression(oracle: Game, budget: Budget, rng: np.random.Generator | None = None) -> EstimateWithError:
    """Shapley-kernel weighted least squares with an exact efficiency constraint.

    With ``max_evaluations >= 2**d`` every coalition is used with its exact
    kernel weight and the solution is the exact Shapley value. Otherwise
    coalitions are drawn from the kernel distribution (together with their
    complements when ``pairing``), always alongside the empty and full sets.
    """
    d = oracle.d
    if budget.max_evaluations < d + 2:
        raise InvalidArgumentError(f"regression needs a budget of at least d + 2 = {d + 2}")
    cache = EvaluationCache(oracle)
    v0 = cache.evaluate(0)
    v1 = cache.evaluate((1 << d) - 1)
    total = v1 - v0
    if d == 1:
        return EstimateWithError(np.array([total]), np.zeros(1), cache.misses)

    if budget.max_evaluations >= 1 << d:
        bits = np.arange(1, (1 << d) - 1, dtype=np.int64)
        Z = ((bits[:, None] >> np.arange(d)) & 1).astype(float)
        sizes = Z.sum(axis=1).astype(int)
        mu = np.array([(d - 1) / (comb(d, s) * s * (d - s)) for s in sizes])
        y = cache.evaluate_many(bits) - v0
        A = (Z * mu[:, None]).T @ Z / mu.sum()
        b = (Z * mu[:, None]).T @ y / mu.sum()
        phi, _ = _solve_constrained(A, b, total)
        return EstimateWithError(phi, np.zeros(d), cache.misses)

    rng = make_rng(budget.seed) if rng is None else rng
    probs = kernel_size_weights(d)
    full = (1 << d) - 1
    weights = np.int64(1) << np.arange(d, dtype=np.int64)
    per_draw = 2 if budget.pairing else 1
    seen = {0, full}
    draws: list[int] = []
    attempts, max_draws = 0, 50 * budget.max_evaluations
    batch = max(64, budget.max_evaluations)
    while attempts < max_draws and len(seen) + per_draw <= budget.max_evaluations:
        sizes = rng.choice(np.arange(1, d), size=batch, p=probs)
        ranks = np.argsort(np.argsort(rng.random((batch, d)), axis=1), axis=1)
        for S in ((ranks < sizes[:, None]) @ weights).tolist():
            if attempts >= max_draws or len(seen) + per_draw > budget.max_evaluations:
                break
            attempts += 1
            group = [S, full ^ S] if budget.pairing else [S]
            seen.update(group)
            draws.extend(group)
    if len(draws) < 2:
        raise EstimationError("too few sampled coalitions; increase the budget")
    cache.evaluate_many(np.array(sorted(seen - {0, full}), dtype=np.int64))

    bits = np.array(draws, dtype=np.int64)
    Z = ((bits[:, None] >> np.arange(d)) & 1).astype(float)
    y = np.array([cache.store[int(s)] for s in bits]) - v0
    A = Z.T @ Z / len(bits)
    b = (Z * y[:, None]).mean(axis=0)
    phi, C = _solve_constrained(A, b, total)
    # sandwich form: spread of z * residual, so an exact fit reports zero error
    scores = Z * (y - Z @ phi)[:, None]
    if budget.pairing:
        scores = 0.5 * (scores[0::2] + scores[1::2])
    n = scores.shape[0]
    if n < 2:
        stderr = np.full(d, np.inf)
    else:
        cov = np.atleast_2d(np.cov(scores, rowvar=False))
        stderr = np.sqrt(np.clip(np.diag(C @ cov @ C.T) / n, 0.0, None))
    return EstimateWithError(phi, stderr, cache.misses)


ESTIMATORS = {"mc": shapley_mc_permutation, "regression": shapley_regression}


def estimate_shapley(oracle: Game, budget: Budget, estimator: str = "mc",
                     rng: np.random.Generator | None = None) -> EstimateWithError:
    try:
        fn = ESTIMATORS[estimator]
    except KeyError:
        raise InvalidArgumentError(f"unknown estimator {estimator!r}; choose from {sorted(ESTIMATORS)}") from None
    return fn(oracle, budget, rng)


def meta_attribution_approx(method, source, budget: Budget, targets: Sequence[int] | None = None,
                            estimator: str | None = None, threads: int = 1) -> DirectionalMatrix:
    """Estimated meta-attribution rows for the requested targets.

    The budget applies to each target's metagame separately. Each target draws
    from its own random stream, so results do not depend on ``threads``. The
    diagonal and first-order value of every row are evaluated exactly.
    """
    method, src = _resolve_source(method, source)
    d = src.d
    all_targets = targets is None
    if targets is None:
        targets = src.targets if method is None else tuple(range(d))
    targets = tuple(int(i) for i in targets)
    if estimator is None:
        estimator = "mc" if d <= MC_MAX_PLAYERS and all_targets else "regression"

    def row(i):
        if method is None:
            meta = MetaGameOracle(i, table=src)
        else:
            meta = MetaGameOracle(i, method, masked=src)
        r = np.zeros(d)
        err = np.zeros(d)
        diag = meta.evaluate(0)
        first = meta.evaluate((1 << (d - 1)) - 1)
        used = 0
        if d > 1:
            try:
                est = estimate_shapley(meta, budget, estimator, rng=make_rng(budget.seed, stream=i))
            except (EstimationError, InvalidArgumentError) as exc:
                raise type(exc)(f"target {i}: {exc}") from exc
            others = [j for j in range(d) if j != i]
            r[others] = est.values
            err[others] = est.stderr
            used = est.evaluations_used
        r[i] = diag
        return r, err, first, used

    if threads > 1 and len(targets) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(row, targets))
    else:
        results = [row(i) for i in targets]

    entries = np.zeros((d, d))
    stderr = np.zeros((d, d))
    first = np.zeros(d)
    for i, (r, err, total, _) in zip(targets, results):
        entries[i], stderr[i], first[i] = r, err, total
    name = src.method if method is None else method.name
    return DirectionalMatrix(entries, f"Meta-{name}", first, stderr=stderr,
                             targets=None if targets == tuple(range(d)) else targets,
                             evaluations_used={i: res[3] for i, res in zip(targets, results)})
