"""First-order attributions: Shapley value, gradient x input, integrated gradients.

Every method also has a *restricted* form ``phi_i(S; f, x)``: the attribution of
player ``i`` when only the players in ``S`` are present and the rest sit at the
baseline. Restricted attributions are what the metagame engine consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coalition import (
    Game,
    MaskedModel,
    MobiusGame,
    as_bits,
    check_capacity,
    enumerate_game,
    insert_bit,
    mobius_table,
    popcounts,
    zeta_table,
)
from .dual import Dual
from .exceptions import InvalidArgumentError, UnsupportedCapabilityError

DEFAULT_STEPS = 256
_ROWS_PER_CHUNK = 1 << 18


@dataclass
class AttributionVector:
    values: np.ndarray
    method: str
    x: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def __len__(self):
        return self.values.size

    def __getitem__(self, i):
        return self.values[i]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def shapley_weights(n: int) -> np.ndarray:
    """Weights ``1 / (n * C(n-1, s))`` for ``s = 0..n-1``, built without factorials."""
    w = np.empty(n)
    if n == 0:
        return w
    w[0] = 1.0 / n
    for s in range(n - 1):
        w[s + 1] = w[s] * (s + 1) / (n - 1 - s)
    return w


def shapley_from_table(table) -> np.ndarray:
    """Exact Shapley values of a dense game table (length ``2**n``)."""
    table = np.asarray(table, dtype=float)
    size = table.size
    n = size.bit_length() - 1
    if size != 1 << n:
        raise InvalidArgumentError(f"table length {size} is not a power of two")
    w = shapley_weights(n)[np.minimum(popcounts(n), max(n - 1, 0))] if n else np.empty(0)
    phi = np.empty(n)
    for j in range(n):
        v = table.reshape(size >> (j + 1), 2, 1 << j)
        ww = w.reshape(size >> (j + 1), 2, 1 << j)[:, 0, :]
        phi[j] = np.dot(ww.ravel(), (v[:, 1, :] - v[:, 0, :]).ravel())
    return phi


def shapley_value_exact(oracle: Game, limit: int | None = None) -> AttributionVector:
    """Exact Shapley values by weighted marginal contributions over all coalitions."""
    check_capacity(oracle.d, limit)
    table = enumerate_game(oracle, limit)
    return AttributionVector(shapley_from_table(table), "SV", getattr(oracle, "x", None))


def restricted_shapley_table(table, i: int, mobius=None) -> np.ndarray:
    """``phi_i^SV(S)`` for every coalition ``S`` (zero when ``i`` is absent).

    Uses ``phi_i(S) = sum_{i in T <= S} m_T / |T|``, i.e. a zeta transform of
    the Möbius coefficients of sets containing ``i`` divided by their size.
    """
    m = mobius_table(table) if mobius is None else mobius
    n = m.size.bit_length() - 1
    pop = popcounts(n)
    has_i = (np.arange(m.size) >> i) & 1 == 1
    g = np.where(has_i, m / np.maximum(pop, 1), 0.0)
    return zeta_table(g)


# -- derivatives -----------------------------------------------------------

def _require_differentiable(masked: MaskedModel):
    if not isinstance(masked, MaskedModel):
        raise UnsupportedCapabilityError("gradient methods need a MaskedModel, not a bare game")
    if masked.gradient == "none":
        raise UnsupportedCapabilityError("model is marked non-differentiable")


def _generic_dual(model, X, i, j=None):
    coords: list = [X[:, k] for k in range(X.shape[1])]
    if j is None:
        coords[i] = Dual(X[:, i], 1.0)
    elif i == j:
        coords[i] = Dual(Dual(X[:, i], 1.0), Dual(1.0, 0.0))
    else:
        coords[i] = Dual(Dual(X[:, i], 1.0), 0.0)
        coords[j] = Dual(Dual(X[:, j], 0.0), Dual(1.0, 0.0))
    try:
        out = model(coords)
    except TypeError as exc:
        raise UnsupportedCapabilityError(f"model does not accept dual numbers: {exc}") from exc
    if j is None:
        val = out.eps if isinstance(out, Dual) else 0.0
    else:
        val = out.eps.eps if isinstance(out, Dual) and isinstance(out.eps, Dual) else 0.0
    return np.broadcast_to(np.asarray(val, dtype=float), X.shape[:1]).copy()


def _fd_partial(masked: MaskedModel, X, i):
    h = 1e-5 * np.maximum(1.0, np.abs(X[:, i]))
    up, down = X.copy(), X.copy()
    up[:, i] += h
    down[:, i] -= h
    return (masked.predict(up) - masked.predict(down)) / (2 * h)


def partial_derivative(masked: MaskedModel, X, i: int) -> np.ndarray:
    """``∂f/∂x_i`` at rows of ``X`` using the masked model's gradient provider."""
    _require_differentiable(masked)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    model = masked.model
    if masked.gradient in ("auto", "dual") and hasattr(model, "partial"):
        return model.partial(X, i)
    if masked.gradient == "dual":
        return _generic_dual(model, X, i)
    return _fd_partial(masked, X, i)


def second_partial(masked: MaskedModel, X, i: int, j: int) -> np.ndarray:
    """``∂²f/∂x_i∂x_j`` at rows of ``X``."""
    _require_differentiable(masked)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    model = masked.model
    if masked.gradient in ("auto", "dual") and hasattr(model, "second_partial"):
        return model.second_partial(X, i, j)
    if masked.gradient == "dual":
        return _generic_dual(model, X, i, j)
    h = 1e-4 * np.maximum(1.0, np.abs(X[:, j]))
    up, down = X.copy(), X.copy()
    up[:, j] += h
    down[:, j] -= h
    return (partial_derivative(masked, up, i) - partial_derivative(masked, down, i)) / (2 * h)


def _check_target(masked: Game, S, i: int) -> int:
    bits = as_bits(S, masked.d)
    if not 0 <= i < masked.d:
        raise InvalidArgumentError(f"player {i} outside [0, {masked.d})")
    if not bits >> i & 1:
        raise InvalidArgumentError(f"player {i} is not in the coalition; restricted attributions need i in S")
    return bits


def midpoint_nodes(steps: int) -> np.ndarray:
    if steps < 1:
        raise InvalidArgumentError("steps must be a positive integer")
    return (np.arange(steps) + 0.5) / steps


def _gxi_values(masked: MaskedModel, bits: np.ndarray, i: int) -> np.ndarray:
    P = masked.points(bits)
    return (P[:, i] - masked.baseline[i]) * partial_derivative(masked, P, i)


def _ig_values(masked: MaskedModel, bits: np.ndarray, i: int, steps: int) -> np.ndarray:
    alphas = midpoint_nodes(steps)
    b = masked.baseline
    P = masked.points(bits)
    out = np.empty(len(P))
    chunk = max(1, _ROWS_PER_CHUNK // steps)
    for start in range(0, len(P), chunk):
        Pc = P[start:start + chunk]
        path = b + alphas[None, :, None] * (Pc[:, None, :] - b)
        g = partial_derivative(masked, path.reshape(-1, masked.d), i).reshape(len(Pc), steps)
        out[start:start + chunk] = g.mean(axis=1) * (Pc[:, i] - b[i])
    return out


def grad_times_input(masked: MaskedModel, S, i: int) -> float:
    """``(x_i - b_i) * ∂f_S/∂x_i`` with absent coordinates frozen at the baseline."""
    bits = _check_target(masked, S, i)
    _require_differentiable(masked)
    return float(_gxi_values(masked, np.array([bits]), i)[0])


def integrated_gradients(masked: MaskedModel, S, i: int, steps: int = DEFAULT_STEPS) -> float:
    """Midpoint-rule integrated gradients of the masked model ``f_S`` for player ``i``."""
    bits = _check_target(masked, S, i)
    _require_differentiable(masked)
    return float(_ig_values(masked, np.array([bits]), i, steps)[0])


# -- attribution methods ---------------------------------------------------

class AttributionMethod:
    """A first-order method with restricted evaluation ``phi_i(S; f, x)``."""

    name = "?"
    exact = True

    def restricted(self, masked: MaskedModel, S, i: int) -> float:
        raise NotImplementedError

    def _restricted_many(self, masked: MaskedModel, bits: np.ndarray, i: int) -> np.ndarray:
        return np.array([self.restricted(masked, int(b), i) for b in bits])

    def target_table(self, masked: MaskedModel, i: int, cache: dict | None = None) -> np.ndarray:
        """``phi_i(S + {i})`` for all ``S`` over the other players, in compressed bit order."""
        check_capacity(masked.d)
        sub = np.arange(1 << (masked.d - 1), dtype=np.int64)
        full_bits = np.array([insert_bit(int(c), i) for c in sub], dtype=np.int64)
        return self._restricted_many(masked, full_bits, i)

    def attribute(self, masked: MaskedModel) -> AttributionVector:
        full = (1 << masked.d) - 1
        return AttributionVector(
            [self.restricted(masked, full, i) for i in range(masked.d)], self.name, masked.x
        )

    def __repr__(self):
        return f"{type(self).__name__}()"


class ShapleyValue(AttributionMethod):
    name = "SV"

    def restricted(self, masked, S, i):
        bits = _check_target(masked, S, i)
        if isinstance(masked, MobiusGame):
            return masked.restricted_shapley(bits, i)
        members = [k for k in range(masked.d) if bits >> k & 1]
        check_capacity(len(members))
        sub = np.arange(1 << len(members), dtype=np.int64)
        full = np.zeros_like(sub)
        for pos, k in enumerate(members):
            full |= ((sub >> pos) & 1) << k
        table = masked.evaluate_many(full)
        return float(shapley_from_table(table)[members.index(i)])

    def target_table(self, masked, i, cache=None):
        check_capacity(masked.d)
        cache = {} if cache is None else cache
        if "mobius" not in cache:
            cache["mobius"] = mobius_table(enumerate_game(masked))
        m = cache["mobius"]
        R = restricted_shapley_table(None, i, mobius=m)
        d = masked.d
        return R.reshape(1 << (d - 1 - i), 2, 1 << i)[:, 1, :].ravel().copy()

    def attribute(self, masked):
        return shapley_value_exact(masked)


class GradientTimesInput(AttributionMethod):
    name = "GxI"

    def restricted(self, masked, S, i):
        return grad_times_input(masked, S, i)

    def _restricted_many(self, masked, bits, i):
        _require_differentiable(masked)
        return _gxi_values(masked, bits, i)


class IntegratedGradients(AttributionMethod):
    name = "IG"
    exact = False

    def __init__(self, steps: int = DEFAULT_STEPS):
        midpoint_nodes(steps)
        self.steps = int(steps)

    def restricted(self, masked, S, i):
        return integrated_gradients(masked, S, i, self.steps)

    def _restricted_many(self, masked, bits, i):
        _require_differentiable(masked)
        return _ig_values(masked, bits, i, self.steps)

    def __repr__(self):
        return f"IntegratedGradients(steps={self.steps})"


def get_method(name, steps: int = DEFAULT_STEPS) -> AttributionMethod:
    """Resolve ``"sv"``, ``"gxi"`` or ``"ig"`` (or pass a method through)."""
    if isinstance(name, AttributionMethod):
        return name
    key = str(name).lower().replace("×", "x").replace("-", "").replace("_", "")
    if key in ("sv", "shapley"):
        return ShapleyValue()
    if key in ("gxi", "gradxinput", "gradienttimesinput"):
        return GradientTimesInput()
    if key in ("ig", "integratedgradients"):
        return IntegratedGradients(steps)
    raise InvalidArgumentError(f"unknown attribution method {name!r}")


def restricted_attribution(method, masked: MaskedModel, S, i: int) -> float:
    """``phi_i(S; f, x)``: the method applied with only the players in ``S`` present."""
    return get_method(method).restricted(masked, S, i)
