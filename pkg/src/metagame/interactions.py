"""Second-order indices: serial attributions and set-based pair indices.

Set-based indices return a :class:`PairIndex` (singles plus a symmetric pair
matrix). Serial methods return a :class:`SerialMatrix` whose entry ``(i, j)``
is the outer attribution of ``j`` applied to the inner attribution of ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .coalition import (
    Game,
    MaskedModel,
    MobiusExpansion,
    check_capacity,
    enumerate_game,
    mobius_table,
    popcounts,
)
from .first_order import (
    DEFAULT_STEPS,
    IntegratedGradients,
    _require_differentiable,
    midpoint_nodes,
    partial_derivative,
    restricted_shapley_table,
    second_partial,
    shapley_from_table,
    shapley_weights,
)
from .exceptions import InvalidArgumentError


@dataclass
class PairIndex:
    """Order-2 index: ``singles[i]`` and a symmetric ``pairs`` matrix built from its upper triangle."""

    singles: np.ndarray
    pairs: np.ndarray
    method: str
    directional: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.singles = np.asarray(self.singles, dtype=float)
        pairs = np.array(self.pairs, dtype=float)
        np.fill_diagonal(pairs, 0.0)
        upper = np.triu(pairs, 1)
        self.pairs = upper + upper.T

    @property
    def d(self) -> int:
        return self.singles.size

    def pair(self, i: int, j: int) -> float:
        return float(self.pairs[i, j])

    def decomposition(self) -> np.ndarray:
        """``singles[i] + 1/2 * sum_j pairs[i, j]`` for every ``i``."""
        return self.singles + 0.5 * self.pairs.sum(axis=1)


@dataclass
class SerialMatrix:
    entries: np.ndarray
    method: str
    first_order: np.ndarray | None = None

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)


def _pair_views(table: np.ndarray, i: int, j: int):
    """Views ``v[S]``, ``v[S+i]``, ``v[S+j]``, ``v[S+ij]`` over ``S`` avoiding ``i, j``."""
    if i == j:
        raise InvalidArgumentError("pair needs two distinct players")
    lo, hi = min(i, j), max(i, j)
    n = table.size.bit_length() - 1
    t = table.reshape(1 << (n - 1 - hi), 2, 1 << (hi - 1 - lo), 2, 1 << lo)
    # axis 1 toggles hi, axis 3 toggles lo
    v00, v01, v10, v11 = t[:, 0, :, 0, :], t[:, 0, :, 1, :], t[:, 1, :, 0, :], t[:, 1, :, 1, :]
    return v00, v01, v10, v11


def stii_pair_from_table(table, i: int, j: int) -> float:
    """Order-2 Shapley-Taylor pair value from a dense table via discrete derivatives."""
    table = np.asarray(table, dtype=float)
    n = table.size.bit_length() - 1
    v00, v01, v10, v11 = _pair_views(table, i, j)
    pop = _pair_views(popcounts(n), i, j)[0]
    w = 2.0 * shapley_weights(n)[pop]
    delta = v11 - v10 - v01 + v00
    return float(np.dot(w.ravel(), delta.ravel()))


def stii_pairwise(oracle: Game, limit: int | None = None) -> PairIndex:
    """Shapley-Taylor interaction index of order 2 from discrete second derivatives.

    ``pairs[i, j] = sum_{S} 2 / (d C(d-1, |S|)) * (v(S+ij) - v(S+i) - v(S+j) + v(S))``
    over ``S`` avoiding ``i`` and ``j``; ``singles[i] = v({i}) - v({})``.
    """
    check_capacity(oracle.d, limit)
    table = enumerate_game(oracle, limit)
    d = oracle.d
    pairs = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1, d):
            pairs[i, j] = pairs[j, i] = stii_pair_from_table(table, i, j)
    singles = np.array([table[1 << i] - table[0] for i in range(d)])
    return PairIndex(singles, pairs, "STII")


def _group_by_pairs(exp: MobiusExpansion, weight_fn):
    """Accumulate ``weight_fn(|T|) * m_T`` into every pair ``{i, j} <= T``."""
    d = exp.d
    pairs = np.zeros((d, d))
    for bits, m in exp.items():
        members = [k for k in range(d) if bits >> k & 1]
        size = len(members)
        if size < 2:
            continue
        w = weight_fn(size)
        if w == 0.0:
            continue
        for a in range(size):
            for b in range(a + 1, size):
                i, j = members[a], members[b]
                pairs[i, j] += w * m
                pairs[j, i] = pairs[i, j]
    return pairs


def _group_by_singles(exp: MobiusExpansion, weight_fn):
    d = exp.d
    singles = np.zeros(d)
    for bits, m in exp.items():
        size = bits.bit_count()
        if size == 0:
            continue
        w = weight_fn(size)
        if w == 0.0:
            continue
        for k in range(d):
            if bits >> k & 1:
                singles[k] += w * m
    return singles


def stii_via_mobius(exp: MobiusExpansion) -> PairIndex:
    """STII from Möbius coefficients: ``pairs[i, j] = sum_{T >= ij} m_T / C(|T|, 2)``."""
    singles = _group_by_singles(exp, lambda t: 1.0 if t == 1 else 0.0)
    pairs = _group_by_pairs(exp, lambda t: 1.0 / comb(t, 2))
    return PairIndex(singles, pairs, "STII")


def fsii_via_mobius(exp: MobiusExpansion) -> PairIndex:
    """Faithful Shapley interaction index of order 2 from its Möbius representation."""
    singles = _group_by_singles(
        exp, lambda t: 1.0 if t == 1 else (-2.0 * (t - 2) / (t * (t + 1)) if t > 2 else 0.0)
    )
    pairs = _group_by_pairs(exp, lambda t: 1.0 if t == 2 else 6.0 / (t * (t + 1)))
    return PairIndex(singles, pairs, "FSII")


def two_shapley_via_mobius(exp: MobiusExpansion) -> PairIndex:
    """Order-2 n-Shapley values from Möbius coefficients.

    Pairs are the pairwise Shapley interaction index ``sum_{T >= ij} m_T / (|T| - 1)``;
    singles are ``m_i + sum_{T > i, |T| > 2} (1/|T| - 1/2) m_T``, the Shapley
    value minus half of its pair interactions.
    """
    singles = _group_by_singles(exp, lambda t: 1.0 if t == 1 else (1.0 / t - 0.5 if t > 2 else 0.0))
    pairs = _group_by_pairs(exp, lambda t: 1.0 / (t - 1))
    return PairIndex(singles, pairs, "2SV")


def shapley_via_mobius(exp: MobiusExpansion) -> np.ndarray:
    """``phi_i = sum_{T > i} m_T / |T|``."""
    return _group_by_singles(exp, lambda t: 1.0 / t)


def serial_shapley(masked: Game, limit: int | None = None) -> SerialMatrix:
    """Serial Shapley value: Shapley values of the games ``S -> phi_i^SV(S)``.

    The inner attribution is zero whenever ``i`` is absent from ``S``. All
    inner values come from one enumeration of the game.
    """
    check_capacity(masked.d, limit)
    table = enumerate_game(masked, limit)
    m = mobius_table(table)
    d = masked.d
    entries = np.empty((d, d))
    first = np.empty(d)
    for i in range(d):
        inner = restricted_shapley_table(None, i, mobius=m)
        entries[i] = shapley_from_table(inner)
        first[i] = inner[-1]
    return SerialMatrix(entries, "SerialSV", first)


def integrated_hessians(masked: MaskedModel, steps: int = DEFAULT_STEPS) -> SerialMatrix:
    """Integrated gradients applied to each integrated-gradients attribution.

    With ``g_i(t) = ∂_i f(b + t(x - b))`` and ``H_ij(t)`` the Hessian on the same
    path, the entry is::

        (x_j - b_j) * mean_a (1/a) int_0^a ( [i == j] g_i(t) + (x_i - b_i) t H_ij(t) ) dt

    The outer mean uses ``steps`` midpoint nodes ``a``; the inner integrals are
    cumulative midpoint sums on a grid of spacing ``1 / (2 steps)``, which ends
    exactly on every outer node.
    """
    _require_differentiable(masked)
    alphas = midpoint_nodes(steps)
    h = 0.5 / steps
    t = (np.arange(2 * steps) + 0.5) * h
    ends = 2 * np.arange(steps)  # cumulative index whose upper limit is alphas[k]
    x, b = masked.x, masked.baseline
    d = masked.d
    dx = x - b
    P = b + t[:, None] * dx

    def running_mean(values):
        return h * np.cumsum(values)[ends] / alphas

    entries = np.empty((d, d))
    for i in range(d):
        inner_g = running_mean(partial_derivative(masked, P, i))
        for j in range(i, d):
            H = second_partial(masked, P, i, j)
            inner_h = running_mean(t * H)
            entries[i, j] = dx[j] * (dx[i] * inner_h + (inner_g if i == j else 0.0)).mean()
            if j != i:
                entries[j, i] = dx[i] * dx[j] * inner_h.mean()
    ig = IntegratedGradients(steps)
    first = np.array([ig.restricted(masked, (1 << d) - 1, i) for i in range(d)])
    return SerialMatrix(entries, "IH", first)


def sop_pairwise(masked: MaskedModel, steps: int = DEFAULT_STEPS, limit: int | None = None) -> PairIndex:
    """Sum of Powers at order 2.

    The directional precursor (stored in ``PairIndex.directional[i, j]``) is

        sum_{S avoiding i, j} [phi_i^IG(S+ij) - phi_i^IG(S+i)] / ((d-1) C(d-2, |S|)),

    the set-based pair is its symmetrization and ``singles[i] = m_{i}``.
    """
    check_capacity(masked.d, limit)
    _require_differentiable(masked)
    d = masked.d
    ig = IntegratedGradients(steps)
    all_bits = np.arange(1 << d, dtype=np.int64)
    pop = popcounts(d)
    directional = np.zeros((d, d))
    for i in range(d):
        phi = np.zeros(1 << d)
        has_i = (all_bits >> i) & 1 == 1
        phi[has_i] = ig._restricted_many(masked, all_bits[has_i], i)
        for j in range(d):
            if j == i:
                continue
            S = all_bits[((all_bits >> i) & 1 == 0) & ((all_bits >> j) & 1 == 0)]
            sizes = pop[S]
            weights = np.array([1.0 / ((d - 1) * comb(d - 2, int(s))) for s in sizes])
            directional[i, j] = np.dot(weights, phi[S | (1 << i) | (1 << j)] - phi[S | (1 << i)])
    values = masked.evaluate_many(np.array([0] + [1 << i for i in range(d)], dtype=np.int64))
    singles = values[1:] - values[0]
    pairs = directional + directional.T
    return PairIndex(singles, pairs, "SOP", directional=directional)
