import numpy as np
import pytest

from conftest import random_masked
from metagame import (
    Budget,
    EstimationError,
    InvalidArgumentError,
    MaskedModel,
    TableGame,
    additive_model,
    estimate_shapley,
    meta_attribution_approx,
    meta_attribution_exact,
    random_mobius_game,
    random_sparse_polynomial,
    shapley_mc_permutation,
    shapley_regression,
    shapley_value_exact,
)
from metagame.approx import kernel_size_weights, make_rng


@pytest.fixture(scope="module")
def game8():
    return random_mobius_game(8, 0.2, 4)


def test_budget_validation():
    with pytest.raises(InvalidArgumentError):
        Budget(0)
    with pytest.raises(InvalidArgumentError):
        Budget(10, seed=-1)


@pytest.mark.parametrize("estimator", ["mc", "regression"])
@pytest.mark.parametrize("pairing", [False, True])
def test_budget_is_never_exceeded(game8, estimator, pairing):
    for budget in (12, 40, 100, 257):
        before = game8.eval_count
        try:
            est = estimate_shapley(game8, Budget(budget, 1, pairing), estimator)
        except EstimationError:
            assert game8.eval_count - before <= budget
            continue
        assert est.evaluations_used == game8.eval_count - before
        assert est.evaluations_used <= budget


def test_too_small_budgets_are_rejected(game8):
    with pytest.raises(InvalidArgumentError):
        shapley_mc_permutation(game8, Budget(8))
    with pytest.raises(InvalidArgumentError):
        shapley_regression(game8, Budget(9))


def test_mc_is_unbiased(game8):
    exact = shapley_value_exact(game8).values
    runs = np.array([shapley_mc_permutation(game8, Budget(9 * 4, seed)).values for seed in range(200)])
    se = runs.std(axis=0, ddof=1) / np.sqrt(len(runs))
    assert np.all(np.abs(runs.mean(axis=0) - exact) < 4 * se + 1e-12)


def test_mc_is_efficient_per_run(game8):
    est = shapley_mc_permutation(game8, Budget(90, 3))
    assert est.values.sum() == pytest.approx(game8.evaluate(255) - game8.evaluate(0), abs=1e-12)


def test_mc_single_permutation_has_infinite_stderr(game8):
    est = shapley_mc_permutation(game8, Budget(9, 0))
    assert np.all(np.isinf(est.stderr))


@pytest.mark.parametrize("estimator", ["mc", "regression"])
def test_error_shrinks_with_budget(game8, estimator):
    exact = shapley_value_exact(game8).values

    def mse(budget):
        return np.mean([np.mean((estimate_shapley(game8, Budget(budget, s), estimator).values - exact) ** 2)
                        for s in range(20)])

    assert mse(240) < mse(60)


@pytest.mark.parametrize("estimator", ["mc", "regression"])
def test_reported_stderr_tracks_spread(estimator):
    game = random_mobius_game(10, 0.1, 1)
    runs = [estimate_shapley(game, Budget(660, s), estimator) for s in range(60)]
    spread = np.std([r.values for r in runs], axis=0, ddof=1).mean()
    reported = np.mean([r.stderr for r in runs])
    assert 0.6 < reported / spread < 1.6


def test_regression_efficiency_is_exact(game8):
    for seed in range(5):
        est = shapley_regression(game8, Budget(100, seed, pairing=bool(seed % 2)))
        assert est.values.sum() == pytest.approx(game8.evaluate(255) - game8.evaluate(0), abs=1e-10)


def test_regression_exhaustive_budget_is_exact(game8):
    est = shapley_regression(game8, Budget(256, 0))
    np.testing.assert_allclose(est.values, shapley_value_exact(game8).values, atol=1e-10)
    assert est.evaluations_used == 256
    assert np.all(est.stderr == 0)


def test_additive_game_is_recovered_exactly():
    masked = MaskedModel(additive_model([1.0, -2.0, 0.5, 3.0, 0.0]), np.ones(5), np.zeros(5))
    for estimator in ("mc", "regression"):
        est = estimate_shapley(masked, Budget(20, 0), estimator)
        np.testing.assert_allclose(est.values, [1.0, -2.0, 0.5, 3.0, 0.0], atol=1e-10)


def test_pairing_reduces_stderr():
    game = MaskedModel(random_sparse_polynomial(10, 3, 20, 0), np.ones(10), np.zeros(10))
    for estimator in ("mc", "regression"):
        plain = np.mean([estimate_shapley(game, Budget(550, s), estimator).stderr for s in range(20)])
        paired = np.mean([estimate_shapley(game, Budget(550, s, True), estimator).stderr for s in range(20)])
        assert paired <= plain


def test_seeded_runs_are_reproducible(game8):
    for fn in (shapley_mc_permutation, shapley_regression):
        a = fn(game8, Budget(100, 42)).values
        b = fn(game8, Budget(100, 42)).values
        c = fn(game8, Budget(100, 43)).values
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)


def test_rng_streams_are_independent():
    a = make_rng(5, stream=0).random(4)
    b = make_rng(5, stream=1).random(4)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, make_rng(5, stream=0).random(4))


def test_kernel_size_weights():
    w = kernel_size_weights(6)
    assert w.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(w, w[::-1])
    assert w[0] > w[2]


def test_singular_regression_raises():
    # two coalitions cannot pin down ten coordinates
    game = random_mobius_game(10, 0.1, 0)
    with pytest.raises(EstimationError):
        shapley_regression(game, Budget(12, 0))


def test_single_player_regression():
    est = shapley_regression(TableGame([1.0, 3.0]), Budget(5))
    assert est.values.tolist() == [2.0]


def test_meta_approx_rows_are_efficient_and_close():
    masked = random_masked(0, 15, zero_baseline=True)
    dm = meta_attribution_approx("gxi", masked, Budget(16 * 60, 7))
    assert dm.residuals().max() < 1e-9
    exact = meta_attribution_exact("gxi", masked, targets=[0, 5])
    for i in (0, 5):
        err = np.abs(dm.entries[i] - exact.entries[i])
        assert np.all(err <= 5 * dm.stderr[i] + 1e-9)
    assert all(v <= 16 * 60 for v in dm.evaluations_used.values())


def test_meta_approx_is_thread_invariant():
    masked = random_masked(1, 8)
    a = meta_attribution_approx("sv", masked, Budget(200, 3), threads=1)
    b = meta_attribution_approx("sv", masked, Budget(200, 3), threads=3)
    np.testing.assert_array_equal(a.entries, b.entries)


def test_meta_approx_target_subset_uses_regression():
    masked = random_masked(1, 8)
    dm = meta_attribution_approx("gxi", masked, Budget(300, 3), targets=[2])
    assert dm.rows() == (2,)
    assert dm.residuals().max() < 1e-9


def test_meta_approx_errors_name_the_target():
    masked = random_masked(1, 8)
    with pytest.raises(InvalidArgumentError, match="target 0"):
        meta_attribution_approx("sv", masked, Budget(4, 3), estimator="mc")


def test_mc_table1_large_budget(table1_masked):
    est = shapley_mc_permutation(table1_masked, Budget(10000 * 3, 5))
    assert np.all(est.stderr < 0.3)
    assert np.all(np.abs(est.values - [11.0, 9.0]) <= 3 * est.stderr)


def test_regression_table1_paired_coverage(table1_masked):
    hits = sum(np.all(np.abs(shapley_regression(table1_masked, Budget(64, s, True)).values - [11.0, 9.0]) <= 0.5)
               for s in range(100))
    assert hits >= 95


def test_meta_approx_row_sum_on_d15_polynomial():
    masked = random_masked(3, 15)
    dm = meta_attribution_approx("gxi", masked, Budget(2000, 1), targets=[0], estimator="mc")
    phi0 = meta_attribution_exact("gxi", masked, targets=[0]).first_order[0]
    assert abs(dm.entries[0].sum() - phi0) <= 3 * np.sqrt((dm.stderr[0] ** 2).sum()) + 1e-9


def test_meta_approx_additive_has_no_off_diagonal():
    masked = MaskedModel(additive_model([1.0, 2.0, -1.0, 0.5]), np.ones(4), np.zeros(4))
    dm = meta_attribution_approx("sv", masked, Budget(50, 0))
    off = dm.entries - np.diag(np.diag(dm.entries))
    assert np.all(np.abs(off) <= 3 * dm.stderr + 1e-12)
    np.testing.assert_allclose(np.diag(dm.entries), [1.0, 2.0, -1.0, 0.5])
