"""Seeded sweep over the package's invariants, used by ``metagame verify``."""

from __future__ import annotations

import itertools
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from unittest import mock

import numpy as np

from . import first_order
from .approx import Budget, shapley_mc_permutation, shapley_regression
from .exceptions import EstimationError
from .coalition import EvaluationCache, MaskedModel, enumerate_game, mobius_evaluate, mobius_transform
from .first_order import IntegratedGradients, shapley_value_exact
from .interactions import (
    fsii_via_mobius,
    integrated_hessians,
    serial_shapley,
    shapley_via_mobius,
    sop_pairwise,
    stii_pairwise,
    stii_via_mobius,
    two_shapley_via_mobius,
)
from .meta import attribution_table, meta_attribution_exact, symmetrize
from .zoo import random_mobius_game, random_sparse_polynomial


def random_masked(seed: int, d: int, zero_baseline: bool = False) -> MaskedModel:
    """Random sparse polynomial (order <= 3) at a random input, optionally with a random baseline."""
    rng = np.random.default_rng([seed, d])
    model = random_sparse_polynomial(d, min(3, d), d + 2, seed=int(rng.integers(2 ** 32)))
    x = rng.uniform(-1.5, 1.5, size=d)
    b = np.zeros(d) if zero_baseline else rng.uniform(-0.5, 0.5, size=d)
    return MaskedModel(model, x, b)


def brute_force_shapley(table: np.ndarray) -> np.ndarray:
    """Average marginal contribution over every ordering of the players."""
    n = table.size.bit_length() - 1
    phi = np.zeros(n)
    count = 0
    for perm in itertools.permutations(range(n)):
        S = 0
        for p in perm:
            phi[p] += table[S | 1 << p] - table[S]
            S |= 1 << p
        count += 1
    return phi / count


@dataclass
class CheckResult:
    name: str
    tolerance: float
    instances: int = 0
    worst: float = 0.0
    failure: dict | None = None
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failure is None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "instances": self.instances,
            "worst_residual": self.worst,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "failure": self.failure,
        }


@dataclass
class Check:
    name: str
    tolerance: float
    fn: object
    instances: list = field(default_factory=list)


def _max(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def _mobius_roundtrip(seed, d):
    game = random_mobius_game(d, 0.3, seed)
    exp = mobius_transform(game)
    table = enumerate_game(game)
    return _max([mobius_evaluate(exp, S) - table[S] for S in range(1 << d)])


def _sv_efficiency(seed, d):
    masked = random_masked(seed, d)
    phi = shapley_value_exact(masked).values
    return abs(phi.sum() - (masked.evaluate((1 << d) - 1) - masked.evaluate(0)))


def _sv_bruteforce(seed, d):
    game = random_mobius_game(d, 0.5, seed)
    table = enumerate_game(game)
    return _max(shapley_value_exact(game).values - brute_force_shapley(table))


def _sv_mobius_form(seed, d):
    game = random_mobius_game(d, 0.3, seed)
    return _max(shapley_value_exact(game).values - shapley_via_mobius(game.expansion))


def _stii_paths(seed, d):
    game = random_mobius_game(d, 0.3, seed)
    a, b = stii_pairwise(game), stii_via_mobius(game.expansion)
    return max(_max(a.pairs - b.pairs), _max(a.singles - b.singles))


def _set_index_decomposition(seed, d):
    game = random_mobius_game(d, 0.3, seed)
    phi = shapley_value_exact(game).values
    exp = game.expansion
    return max(_max(index.decomposition() - phi)
               for index in (stii_pairwise(game), fsii_via_mobius(exp), two_shapley_via_mobius(exp)))


def _serial_sv_efficiency(seed, d):
    masked = random_masked(seed, d)
    serial = serial_shapley(masked)
    return max(_max(serial.row_sums() - serial.first_order),
               _max(serial.first_order - shapley_value_exact(masked).values))


def _ih_efficiency(seed, d):
    masked = random_masked(seed, d)
    ih = integrated_hessians(masked, 256)
    return _max(ih.row_sums() - ih.first_order)


def _sop_decomposition(seed, d):
    masked = random_masked(seed, d)
    sop = sop_pairwise(masked, 256)
    ig = IntegratedGradients(256)
    phi = np.array([ig.restricted(masked, (1 << d) - 1, i) for i in range(d)])
    return _max(sop.singles + sop.directional.sum(axis=1) - phi)


def _meta_efficiency(seed, d):
    masked = random_masked(seed, d)
    worst = 0.0
    full = (1 << d) - 1
    for method in ("sv", "gxi"):
        dm = meta_attribution_exact(method, masked)
        ref = first_order.get_method(method)
        phi = np.array([ref.restricted(masked, full, i) for i in range(d)])
        worst = max(worst, _max(dm.entries.sum(axis=1) - phi))
    ext = meta_attribution_exact(None, attribution_table("sv", masked))
    worst = max(worst, _max(ext.residuals()))
    return worst


def _meta_ig_efficiency(seed, d):
    masked = random_masked(seed, d)
    ig = IntegratedGradients(256)
    dm = meta_attribution_exact(ig, masked)
    phi = np.array([first_order.integrated_gradients(masked, (1 << d) - 1, i, 256) for i in range(d)])
    return _max(dm.entries.sum(axis=1) - phi)


def _meta_sv_is_stii(seed, d):
    masked = random_masked(seed, d)
    sym = symmetrize(meta_attribution_exact("sv", masked))
    stii = stii_pairwise(masked)
    return max(_max(sym.pairs - stii.pairs), _max(sym.singles - stii.singles))


def _meta_ig_is_sop(seed, d):
    masked = random_masked(seed, d)
    sym = symmetrize(meta_attribution_exact(IntegratedGradients(256), masked))
    sop = sop_pairwise(masked, 256)
    return max(_max(sym.pairs - sop.pairs), _max(sym.singles - sop.singles))


def _meta_sv_symmetry(seed, d):
    masked = random_masked(seed, d)
    E = meta_attribution_exact("sv", masked).entries
    return _max(E - E.T)


def _separation(seed, d):
    # player 0 enters only through its singleton coefficient
    game = random_mobius_game(d, 0.4, seed)
    exp = game.expansion
    exp.coefficients = {b: v for b, v in exp.coefficients.items() if not (b & 1) or b == 1}
    exp.coefficients[1] = 0.7
    game = type(game)(exp)
    E = meta_attribution_exact("sv", game).entries
    return max(abs(E[0, 0] - 0.7), _max(E[1:, 0]))


def _dual_vs_fd(seed, d):
    masked = random_masked(seed, d)
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.5, 1.5, size=(20, d))
    fd = MaskedModel(masked.model, masked.x, masked.baseline, gradient="fd")
    worst = 0.0
    for i in range(d):
        exact = first_order.partial_derivative(masked, X, i)
        approx = first_order.partial_derivative(fd, X, i)
        worst = max(worst, _max((exact - approx) / np.maximum(1.0, np.abs(exact))))
    return worst


def _cache_transparency(seed, d):
    masked = random_masked(seed, d)
    direct = enumerate_game(masked)
    cache = EvaluationCache(masked)
    before = masked.eval_count
    cached = enumerate_game(cache)
    enumerate_game(cache)
    extra = masked.eval_count - before - (1 << d)
    return float(not np.array_equal(direct, cached)) + max(0, extra)


def _regression_exhaustive(seed, d):
    game = random_mobius_game(d, 0.3, seed)
    est = shapley_regression(game, Budget(1 << d, seed))
    return _max(est.values - shapley_value_exact(game).values)


def _budget_accounting(seed, d):
    game = random_mobius_game(d, 0.3, seed)
    worst = 0.0
    for budget in (d + 2, 3 * d, 10 * d):
        for fn in (shapley_mc_permutation, shapley_regression):
            before = game.eval_count
            try:
                est = fn(game, Budget(budget, seed, pairing=bool(seed % 2)))
            except EstimationError:
                est = None
            used = game.eval_count - before
            worst = max(worst, used - budget)
            if est is not None:
                worst = max(worst, est.evaluations_used - budget, float(used != est.evaluations_used))
    return max(worst, 0.0)


CHECKS = [
    Check("mobius_roundtrip", 1e-9, _mobius_roundtrip, [(d,) for d in (3, 6, 8, 10)]),
    Check("sv_efficiency", 1e-8, _sv_efficiency, [(d,) for d in (3, 6, 9, 12)]),
    Check("sv_bruteforce_permutations", 1e-9, _sv_bruteforce, [(d,) for d in (3, 5, 7)]),
    Check("sv_mobius_form", 1e-9, _sv_mobius_form, [(d,) for d in (4, 7, 10)]),
    Check("stii_path_equivalence", 1e-9, _stii_paths, [(d,) for d in (3, 6, 9)]),
    Check("set_index_decomposition", 1e-9, _set_index_decomposition, [(d,) for d in (3, 6, 10)]),
    Check("serial_sv_efficiency", 1e-9, _serial_sv_efficiency, [(d,) for d in (3, 5, 8)]),
    Check("ih_efficiency", 1e-3, _ih_efficiency, [(d,) for d in (2, 4, 6)]),
    Check("sop_decomposition", 1e-3, _sop_decomposition, [(d,) for d in (2, 4, 6)]),
    Check("meta_efficiency_exact", 1e-9, _meta_efficiency, [(d,) for d in (2, 5, 8)]),
    Check("meta_efficiency_ig", 1e-3, _meta_ig_efficiency, [(d,) for d in (2, 4, 6)]),
    Check("meta_sv_equals_stii", 1e-9, _meta_sv_is_stii, [(d,) for d in (3, 6, 9)]),
    Check("meta_ig_equals_sop", 1e-3, _meta_ig_is_sop, [(d,) for d in (3, 5)]),
    Check("meta_sv_symmetry", 1e-9, _meta_sv_symmetry, [(d,) for d in (3, 6, 9)]),
    Check("meta_sv_separation", 1e-9, _separation, [(d,) for d in (3, 6, 9)]),
    Check("dual_vs_finite_difference", 1e-5, _dual_vs_fd, [(d,) for d in (2, 5, 8)]),
    Check("cache_transparency", 0.0, _cache_transparency, [(d,) for d in (3, 8)]),
    Check("regression_exhaustive_exact", 1e-8, _regression_exhaustive, [(d,) for d in (3, 6, 8)]),
    Check("budget_accounting", 0.0, _budget_accounting, [(d,) for d in (3, 7)]),
]


@contextmanager
def inject_fault():
    """Perturb the smallest-coalition Shapley weight so efficiency breaks."""
    original = first_order.shapley_weights

    def faulty(n):
        w = original(n)
        if n > 1:
            w = w.copy()
            w[0] *= 1.01
        return w

    with mock.patch.object(first_order, "shapley_weights", faulty):
        yield


def run_suite(seed: int = 0, repeats: int = 2, fault: bool = False) -> list[CheckResult]:
    """Run every check on ``repeats`` seeded instances per parameter set."""
    results = []
    ctx = inject_fault() if fault else _null()
    with ctx:
        for check in CHECKS:
            res = CheckResult(check.name, check.tolerance)
            start = time.perf_counter()
            for params in check.instances:
                for r in range(repeats):
                    inst_seed = seed * 1000 + r
                    value = float(check.fn(inst_seed, *params))
                    res.instances += 1
                    res.worst = max(res.worst, value)
                    if not value <= check.tolerance and res.failure is None:
                        res.failure = {"seed": inst_seed, "d": params[0], "residual": value}
            res.seconds = time.perf_counter() - start
            results.append(res)
    return results


@contextmanager
def _null():
    yield
