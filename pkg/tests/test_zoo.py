import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metagame import (
    InvalidArgumentError,
    MaskedModel,
    SymbolicModel,
    additive_model,
    mobius_transform,
    product_model,
    random_mobius_game,
    random_sparse_polynomial,
    table1_model,
)


def test_table1_model_values_and_derivatives():
    f = table1_model()
    assert f([2.0, 3.0]) == 20.0
    X = np.array([[2.0, 3.0], [1.0, -1.0]])
    np.testing.assert_array_equal(f(X), [20.0, 2.0])
    np.testing.assert_array_equal(f.partial(X, 0), [10.0, 2.0])
    np.testing.assert_array_equal(f.partial(X, 1), [12.0, -2.0])
    np.testing.assert_array_equal(f.second_partial(X, 1, 1), [4.0, 2.0])
    np.testing.assert_array_equal(f.second_partial(X, 0, 1), [6.0, -2.0])
    np.testing.assert_array_equal(f.hessian(X[0]), [[[0.0, 6.0], [6.0, 4.0]]])


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_symbolic_derivatives_match_finite_differences(d, seed):
    f = random_sparse_polynomial(d, min(3, d), 2 * d, seed)
    x = np.random.default_rng(seed).uniform(-1, 1, size=d)
    h = 1e-6
    for i in range(d):
        e = np.eye(d)[i] * h
        fd = (f(x + e) - f(x - e)) / (2 * h)
        assert f.partial(x, i)[0] == pytest.approx(fd, abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_mobius_at_matches_transform(d, seed):
    f = random_sparse_polynomial(d, min(3, d), 2 * d, seed)
    x = np.random.default_rng(seed).uniform(-1, 1, size=d)
    direct = f.mobius_at(x).to_dense()
    via = mobius_transform(MaskedModel(f, x, np.zeros(d))).to_dense()
    np.testing.assert_allclose(direct, via, atol=1e-12)


def test_random_polynomial_shape_and_determinism():
    a = random_sparse_polynomial(8, 2, 12, 5)
    b = random_sparse_polynomial(8, 2, 12, 5)
    assert a.terms == b.terms
    assert len(a.terms) == 12
    assert all(1 <= sum(p > 0 for p in exps) <= 2 for _, exps in a.terms)


def test_random_mobius_game_sparsity():
    game = random_mobius_game(10, 0.05, 2)
    assert len(game.expansion) == round(0.05 * 1024)
    assert all(-1 <= v <= 1 for _, v in game.expansion.items())


def test_model_serialization_roundtrip():
    f = random_sparse_polynomial(5, 3, 7, 1)
    g = SymbolicModel.from_dict(5, f.to_dict())
    assert g.terms == f.terms


def test_simple_models():
    assert additive_model([1.0, 2.0])([3.0, 4.0]) == 11.0
    assert product_model(3)([2.0, 3.0, 4.0]) == 24.0
    assert "x0*x1^2" in repr(table1_model())


def test_invalid_models():
    with pytest.raises(InvalidArgumentError):
        SymbolicModel(2, [(1.0, (1, 0, 0))])
    with pytest.raises(InvalidArgumentError):
        random_sparse_polynomial(3, 4, 2, 0)
    with pytest.raises(InvalidArgumentError):
        random_mobius_game(4, 0.0, 0)
    with pytest.raises(InvalidArgumentError):
        table1_model()([1.0, 2.0, 3.0])
