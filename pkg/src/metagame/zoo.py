"""Symbolic polynomial models and random games with known ground truth."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .coalition import MAX_PLAYERS, MobiusExpansion, MobiusGame
from .dual import Dual
from .exceptions import InvalidArgumentError


class SymbolicModel:
    """Sparse polynomial ``f(x) = sum_t c_t * prod_k x_k ** p_tk``.

    Derivatives come from nested dual numbers, so first and second partials are
    exact. Evaluation is vectorized over leading axes of ``x``.
    """

    vectorized = True

    def __init__(self, d: int, terms: Sequence[tuple[float, Sequence[int]]]):
        if not 1 <= d <= MAX_PLAYERS:
            raise InvalidArgumentError(f"d must be in [1, {MAX_PLAYERS}]")
        self.d = d
        self.terms: list[tuple[float, tuple[int, ...]]] = []
        for coef, exps in terms:
            exps = tuple(int(p) for p in exps)
            if len(exps) != d or min(exps) < 0:
                raise InvalidArgumentError(f"exponent vector {exps} invalid for d={d}")
            self.terms.append((float(coef), exps))

    def support(self, term_index: int) -> int:
        exps = self.terms[term_index][1]
        return sum(1 << k for k, p in enumerate(exps) if p > 0)

    def _eval_terms(self, coords, terms):
        total = 0.0
        for coef, exps in terms:
            prod = coef
            for k, p in enumerate(exps):
                if p:
                    prod = prod * coords[k] ** p
            total = total + prod
        return total

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise InvalidArgumentError(f"expected {self.d} features, got {x.shape[-1]}")
        coords = [x[..., k] for k in range(self.d)]
        out = self._eval_terms(coords, self.terms)
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape[:-1]).copy() if x.ndim > 1 else float(out)

    def partial(self, X, i: int) -> np.ndarray:
        """``∂f/∂x_i`` at each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        terms = [t for t in self.terms if t[1][i] > 0]
        coords = [X[:, k] for k in range(self.d)]
        coords[i] = Dual(X[:, i], 1.0)
        out = self._eval_terms(coords, terms)
        eps = out.eps if isinstance(out, Dual) else 0.0
        return np.broadcast_to(np.asarray(eps, dtype=float), X.shape[:1]).copy()

    def gradient(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([self.partial(X, i) for i in range(self.d)], axis=-1)

    def second_partial(self, X, i: int, j: int) -> np.ndarray:
        """``∂²f/∂x_i∂x_j`` at each row of ``X`` via nested duals."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        terms = [t for t in self.terms if t[1][i] > 0 and t[1][j] > 0]
        coords: list = [X[:, k] for k in range(self.d)]
        if i == j:
            coords[i] = Dual(Dual(X[:, i], 1.0), Dual(1.0, 0.0))
        else:
            coords[i] = Dual(Dual(X[:, i], 1.0), 0.0)
            coords[j] = Dual(Dual(X[:, j], 0.0), Dual(1.0, 0.0))
        out = self._eval_terms(coords, terms)
        val = out.eps.eps if isinstance(out, Dual) and isinstance(out.eps, Dual) else 0.0
        return np.broadcast_to(np.asarray(val, dtype=float), X.shape[:1]).copy()

    def hessian(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        H = np.empty((X.shape[0], self.d, self.d))
        for i in range(self.d):
            for j in range(i, self.d):
                H[:, i, j] = H[:, j, i] = self.second_partial(X, i, j)
        return H

    def mobius_at(self, x) -> MobiusExpansion:
        """Möbius expansion of the masked game at ``x`` for a zero baseline.

        Only valid for ``b = 0``: each monomial then contributes to exactly the
        coefficient of its own support.
        """
        x = np.asarray(x, dtype=float)
        coeffs: dict[int, float] = {}
        for t, (coef, exps) in enumerate(self.terms):
            value = coef * float(np.prod([x[k] ** p for k, p in enumerate(exps) if p]))
            S = self.support(t)
            coeffs[S] = coeffs.get(S, 0.0) + value
        return MobiusExpansion(self.d, coeffs)

    def to_dict(self) -> list[dict]:
        return [{"coef": c, "exponents": list(e)} for c, e in self.terms]

    @classmethod
    def from_dict(cls, d: int, monomials: list[dict]) -> "SymbolicModel":
        return cls(d, [(m["coef"], m["exponents"]) for m in monomials])

    def __repr__(self):
        parts = []
        for c, exps in self.terms:
            mono = "*".join(f"x{k}" + (f"^{p}" if p > 1 else "") for k, p in enumerate(exps) if p)
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return f"SymbolicModel(d={self.d}, {' + '.join(parts) or '0'})"


def table1_model() -> SymbolicModel:
    """The two-feature model ``f(x) = x0 + x0 * x1**2``."""
    return SymbolicModel(2, [(1.0, (1, 0)), (1.0, (1, 2))])


def random_sparse_polynomial(d: int, max_order: int, n_terms: int, seed: int) -> SymbolicModel:
    """Random polynomial with ``n_terms`` monomials of support size at most ``max_order``.

    Support sizes are uniform on ``1..max_order``, the support uniform among
    subsets of that size, exponents uniform on {1, 2, 3} and coefficients
    uniform on [-2, 2].
    """
    if not 1 <= d <= MAX_PLAYERS:
        raise InvalidArgumentError(f"d must be in [1, {MAX_PLAYERS}]")
    if not 1 <= max_order <= d:
        raise InvalidArgumentError(f"max_order must be in [1, d={d}], got {max_order}")
    if n_terms < 1:
        raise InvalidArgumentError("n_terms must be positive")
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(n_terms):
        size = int(rng.integers(1, max_order + 1))
        support = rng.choice(d, size=size, replace=False)
        exps = np.zeros(d, dtype=int)
        exps[support] = rng.integers(1, 4, size=size)
        terms.append((float(rng.uniform(-2.0, 2.0)), tuple(int(p) for p in exps)))
    return SymbolicModel(d, terms)


def random_mobius_game(d: int, sparsity: float, seed: int) -> MobiusGame:
    """Game with ``round(sparsity * 2**d)`` nonzero Möbius coefficients, uniform on [-1, 1]."""
    if not 0 < sparsity <= 1:
        raise InvalidArgumentError(f"sparsity must be in (0, 1], got {sparsity}")
    if not 0 <= d <= 30:
        raise InvalidArgumentError("random_mobius_game supports d <= 30")
    rng = np.random.default_rng(seed)
    n = 1 << d
    k = max(1, int(round(sparsity * n)))
    chosen = rng.choice(n, size=k, replace=False)
    values = rng.uniform(-1.0, 1.0, size=k)
    # uniform draws are nonzero with probability one; keep the count exact anyway
    values[values == 0.0] = 0.5
    return MobiusGame(MobiusExpansion(d, {int(b): float(v) for b, v in zip(chosen, values)}))


def additive_model(coefficients) -> SymbolicModel:
    """Linear model ``f(x) = sum_k c_k x_k``."""
    c = list(coefficients)
    d = len(c)
    return SymbolicModel(d, [(ck, tuple(int(k == j) for j in range(d))) for k, ck in enumerate(c)])


def product_model(d: int) -> SymbolicModel:
    """``f(x) = prod_k x_k``."""
    return SymbolicModel(d, [(1.0, (1,) * d)])
