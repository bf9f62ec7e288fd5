"""Coalitions, games, the Möbius transform and the shared evaluation cache.

Coalitions are bit patterns: bit ``k`` (least significant = player 0) is set
when player ``k`` is present. Dense tables of a ``d``-player game have length
``2**d`` and are indexed by that raw bit pattern.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .exceptions import CapacityError, InvalidArgumentError

MAX_PLAYERS = 63
#: largest ``d`` for which full ``2**d`` enumeration is attempted
EXACT_LIMIT = 24
#: Möbius coefficients with ``|m| <= SPARSITY_THRESHOLD`` are not stored
SPARSITY_THRESHOLD = 1e-12


@dataclass(frozen=True)
class Coalition:
    """A subset of the players ``{0, ..., d-1}``."""

    bits: int
    d: int

    def __post_init__(self):
        if not 0 <= self.d <= MAX_PLAYERS:
            raise InvalidArgumentError(f"player count must be in [0, {MAX_PLAYERS}], got {self.d}")
        if self.bits < 0 or self.bits >> self.d:
            raise InvalidArgumentError(f"bit pattern {self.bits:#b} has players outside [0, {self.d})")

    @classmethod
    def from_players(cls, players: Iterable[int], d: int) -> "Coalition":
        bits = 0
        for p in players:
            if not 0 <= p < d:
                raise InvalidArgumentError(f"player {p} outside [0, {d})")
            bits |= 1 << p
        return cls(bits, d)

    @classmethod
    def empty(cls, d: int) -> "Coalition":
        return cls(0, d)

    @classmethod
    def full(cls, d: int) -> "Coalition":
        return cls((1 << d) - 1, d)

    def players(self) -> tuple[int, ...]:
        return tuple(k for k in range(self.d) if self.bits >> k & 1)

    def size(self) -> int:
        return self.bits.bit_count()

    def __len__(self):
        return self.size()

    def __contains__(self, player: int) -> bool:
        return 0 <= player < self.d and bool(self.bits >> player & 1)

    def __iter__(self):
        return iter(self.players())

    def _check(self, other: "Coalition"):
        if other.d != self.d:
            raise InvalidArgumentError(f"coalitions over {self.d} and {other.d} players")

    def union(self, other: "Coalition") -> "Coalition":
        self._check(other)
        return Coalition(self.bits | other.bits, self.d)

    def intersection(self, other: "Coalition") -> "Coalition":
        self._check(other)
        return Coalition(self.bits & other.bits, self.d)

    def difference(self, other: "Coalition") -> "Coalition":
        self._check(other)
        return Coalition(self.bits & ~other.bits, self.d)

    def complement(self) -> "Coalition":
        return Coalition(((1 << self.d) - 1) ^ self.bits, self.d)

    def add(self, player: int) -> "Coalition":
        return self.union(Coalition.from_players([player], self.d))

    def remove(self, player: int) -> "Coalition":
        return self.difference(Coalition.from_players([player], self.d))

    def issubset(self, other: "Coalition") -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def __repr__(self):
        return f"Coalition({set(self.players()) or '{}'}, d={self.d})"


def as_bits(S, d: int) -> int:
    """Normalize a :class:`Coalition`, raw int, or iterable of players to a bit pattern."""
    if isinstance(S, Coalition):
        if S.d != d:
            raise InvalidArgumentError(f"coalition over {S.d} players used with a {d}-player game")
        return S.bits
    if isinstance(S, (int, np.integer)):
        bits = int(S)
        if bits < 0 or bits >> d:
            raise InvalidArgumentError(f"bit pattern {bits:#b} has players outside [0, {d})")
        return bits
    return Coalition.from_players(S, d).bits


def popcounts(d: int) -> np.ndarray:
    """Sizes of all ``2**d`` coalitions, in bit-pattern order."""
    return np.bitwise_count(np.arange(1 << d, dtype=np.uint64)).astype(np.int64)


def insert_bit(compressed: int, i: int) -> int:
    """Map a coalition over ``[d] \\ {i}`` (players above ``i`` shifted down) to one over ``[d]`` containing ``i``."""
    low = compressed & ((1 << i) - 1)
    return ((compressed >> i) << (i + 1)) | (1 << i) | low


def remove_bit(bits: int, i: int) -> int:
    """Inverse of :func:`insert_bit`; drops player ``i`` and shifts higher players down."""
    low = bits & ((1 << i) - 1)
    return ((bits >> (i + 1)) << i) | low


def check_capacity(d: int, limit: int | None = None):
    limit = EXACT_LIMIT if limit is None else limit
    if d > limit:
        raise CapacityError(
            f"{d} players exceed the exact-engine limit of {limit}; "
            "use the sampling estimators in metagame.approx"
        )


class Game:
    """A cooperative game ``v: 2^[d] -> R`` with an evaluation counter.

    Subclasses implement :meth:`_value` (and optionally :meth:`_values` for
    batches). Implementations must be pure so that concurrent evaluation is safe.
    """

    def __init__(self, d: int):
        if not 0 <= d <= MAX_PLAYERS:
            raise InvalidArgumentError(f"player count must be in [0, {MAX_PLAYERS}], got {d}")
        self.d = d
        self.eval_count = 0
        self._count_lock = threading.Lock()

    def _value(self, bits: int) -> float:
        raise NotImplementedError

    def _values(self, bits: np.ndarray) -> np.ndarray:
        return np.array([self._value(int(b)) for b in bits], dtype=float)

    def _bump(self, n: int):
        with self._count_lock:
            self.eval_count += n

    def evaluate(self, S) -> float:
        bits = as_bits(S, self.d)
        self._bump(1)
        return float(self._value(bits))

    def evaluate_many(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        if bits.size and (bits.min() < 0 or bits.max() >= 1 << self.d):
            raise InvalidArgumentError("bit pattern outside the game's player range")
        self._bump(bits.size)
        return np.asarray(self._values(bits), dtype=float)

    __call__ = evaluate


class TableGame(Game):
    """Game given by a dense table indexed by bit pattern."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        d = int(values.size).bit_length() - 1
        if values.ndim != 1 or values.size != 1 << d:
            raise InvalidArgumentError(f"dense game table must have length 2**d, got {values.size}")
        super().__init__(d)
        self.values = values

    def _value(self, bits):
        return self.values[bits]

    def _values(self, bits):
        return self.values[bits]


class FunctionGame(Game):
    """Game defined by a Python function of the bit pattern."""

    def __init__(self, d: int, fn: Callable[[int], float]):
        super().__init__(d)
        self.fn = fn

    def _value(self, bits):
        return self.fn(bits)


class MaskedModel(Game):
    """Baseline-imputed model ``v(S) = f(x_S, b_{S-bar})``.

    Parameters
    ----------
    model : callable
        Maps a length-``d`` array to a real. Models with a true ``vectorized``
        attribute also accept ``(n, d)`` arrays and return ``(n,)``.
    x, baseline : array_like
        Explained input and the baseline substituted for absent players.
    gradient : {"auto", "dual", "fd", "none"}
        How derivatives are obtained. ``"auto"`` uses exact dual-number
        derivatives when the model provides them and central finite
        differences otherwise; ``"none"`` marks the model as non-differentiable.
    """

    def __init__(self, model, x, baseline, gradient: str = "auto"):
        x = np.asarray(x, dtype=float)
        baseline = np.asarray(baseline, dtype=float)
        if x.ndim != 1 or baseline.shape != x.shape:
            raise InvalidArgumentError(f"x {x.shape} and baseline {baseline.shape} must be equal-length vectors")
        model_d = getattr(model, "d", None)
        if model_d is not None and model_d != x.size:
            raise InvalidArgumentError(f"model expects {model_d} features, x has {x.size}")
        if gradient not in ("auto", "dual", "fd", "none"):
            raise InvalidArgumentError(f"unknown gradient provider {gradient!r}")
        super().__init__(x.size)
        self.model = model
        self.x = x
        self.baseline = baseline
        self.gradient = gradient
        self._bit_masks = 1 << np.arange(self.d, dtype=np.int64)

    def masks(self, bits) -> np.ndarray:
        """Boolean presence matrix ``(n, d)`` for an array of bit patterns."""
        bits = np.asarray(bits, dtype=np.int64)
        return (bits[..., None] & self._bit_masks) != 0

    def points(self, bits) -> np.ndarray:
        """Masked inputs ``(x_S, b_{S-bar})`` for an array of bit patterns."""
        return np.where(self.masks(bits), self.x, self.baseline)

    def point(self, S) -> np.ndarray:
        return self.points(np.array([as_bits(S, self.d)]))[0]

    def predict(self, X) -> np.ndarray:
        """Evaluate the raw model on rows of ``X`` (not counted)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if getattr(self.model, "vectorized", False):
            return np.asarray(self.model(X), dtype=float)
        return np.array([float(self.model(row)) for row in X])

    def _value(self, bits):
        return self.predict(self.points(np.array([bits])))[0]

    def _values(self, bits):
        return self.predict(self.points(bits))

    def restrict(self, S) -> "MaskedModel":
        """Masked model whose explained input is ``(x_S, b_{S-bar})``."""
        return MaskedModel(self.model, self.point(S), self.baseline, self.gradient)


def evaluate_masked(masked: MaskedModel, S) -> float:
    """Evaluate ``f(x_S, b_{S-bar})``; ``S`` must be over ``masked.d`` players."""
    return masked.evaluate(S)


def enumerate_game(oracle: Game, limit: int | None = None) -> np.ndarray:
    """Dense table of all ``2**d`` values; the oracle is called once per coalition."""
    check_capacity(oracle.d, limit)
    return oracle.evaluate_many(np.arange(1 << oracle.d, dtype=np.int64))


def _subset_transform(table: np.ndarray, sign: float) -> np.ndarray:
    # in-place butterfly over each bit: a[S + k] += sign * a[S] for k not in S
    a = np.array(table, dtype=float, copy=True)
    n = a.size
    d = n.bit_length() - 1
    for k in range(d):
        view = a.reshape(n >> (k + 1), 2, 1 << k)
        if sign > 0:
            view[:, 1, :] += view[:, 0, :]
        else:
            view[:, 1, :] -= view[:, 0, :]
    return a


def mobius_table(table) -> np.ndarray:
    """Dense Möbius coefficients ``m_S = sum_{T<=S} (-1)^{|S|-|T|} v(T)``."""
    return _subset_transform(np.asarray(table, dtype=float), -1.0)


def zeta_table(coefficients) -> np.ndarray:
    """Inverse of :func:`mobius_table`: ``v(S) = sum_{T<=S} m_T``."""
    return _subset_transform(np.asarray(coefficients, dtype=float), 1.0)


class MobiusExpansion:
    """Sparse map from coalition bit pattern to Möbius coefficient."""

    def __init__(self, d: int, coefficients: Mapping[int, float] | None = None):
        if not 0 <= d <= MAX_PLAYERS:
            raise InvalidArgumentError(f"player count must be in [0, {MAX_PLAYERS}], got {d}")
        self.d = d
        self.coefficients: dict[int, float] = {}
        for S, value in (coefficients or {}).items():
            self.coefficients[as_bits(S, d)] = float(value)

    @classmethod
    def from_dense(cls, coefficients, threshold: float | None = None) -> "MobiusExpansion":
        threshold = SPARSITY_THRESHOLD if threshold is None else threshold
        coefficients = np.asarray(coefficients, dtype=float)
        d = coefficients.size.bit_length() - 1
        keep = np.flatnonzero(np.abs(coefficients) > threshold)
        return cls(d, {int(k): float(coefficients[k]) for k in keep})

    @classmethod
    def from_players(cls, d: int, terms: Iterable[tuple[Iterable[int], float]]) -> "MobiusExpansion":
        exp = cls(d)
        for players, value in terms:
            bits = Coalition.from_players(players, d).bits
            exp.coefficients[bits] = exp.coefficients.get(bits, 0.0) + float(value)
        return exp

    def __getitem__(self, S) -> float:
        return self.coefficients.get(as_bits(S, self.d), 0.0)

    def __len__(self):
        return len(self.coefficients)

    def items(self):
        """``(bits, coefficient)`` pairs in ascending bit-pattern order."""
        return sorted(self.coefficients.items())

    def to_dense(self) -> np.ndarray:
        check_capacity(self.d)
        out = np.zeros(1 << self.d)
        for bits, value in self.coefficients.items():
            out[bits] = value
        return out

    def support_players(self) -> set[int]:
        players = set()
        for bits in self.coefficients:
            players.update(k for k in range(self.d) if bits >> k & 1)
        return players

    def __repr__(self):
        terms = ", ".join(
            f"{Coalition(b, self.d).players()}: {v:.6g}" for b, v in self.items()
        )
        return f"MobiusExpansion(d={self.d}, {{{terms}}})"


def mobius_transform(oracle: Game, threshold: float | None = None, limit: int | None = None) -> MobiusExpansion:
    """Möbius expansion of a game, obtained from one full enumeration."""
    table = enumerate_game(oracle, limit)
    return MobiusExpansion.from_dense(mobius_table(table), threshold)


def mobius_evaluate(exp: MobiusExpansion, S) -> float:
    """Reconstruct ``v(S)`` as the sum of the stored coefficients contained in ``S``."""
    bits = as_bits(S, exp.d)
    total = 0.0
    for T, value in exp.items():
        if T & ~bits == 0:
            total += value
    return total


class MobiusGame(Game):
    """Game backed by a Möbius expansion."""

    def __init__(self, expansion: MobiusExpansion):
        super().__init__(expansion.d)
        self.expansion = expansion
        self._keys = np.array([b for b, _ in expansion.items()], dtype=np.int64)
        self._vals = np.array([v for _, v in expansion.items()], dtype=float)

    def _value(self, bits):
        return mobius_evaluate(self.expansion, bits)

    def _values(self, bits):
        if self._keys.size == 0:
            return np.zeros(len(bits))
        bits = np.asarray(bits, dtype=np.int64)
        out = np.empty(len(bits))
        step = max(1, (1 << 22) // self._keys.size)
        for lo in range(0, len(bits), step):
            chunk = bits[lo:lo + step]
            contained = (self._keys[None, :] & ~chunk[:, None]) == 0
            out[lo:lo + step] = contained @ self._vals
        return out

    def restricted_shapley(self, bits: int, i: int) -> float:
        """``phi_i`` of the subgame on ``bits``, from coefficients inside it that contain ``i``."""
        inside = ((self._keys & ~bits) == 0) & ((self._keys >> i) & 1 == 1)
        if not inside.any():
            return 0.0
        sizes = np.array([bin(int(k)).count("1") for k in self._keys[inside]])
        return float(np.sum(self._vals[inside] / sizes))


class EvaluationCache(Game):
    """Memoizing wrapper: the backing oracle sees each coalition at most once."""

    def __init__(self, oracle: Game):
        super().__init__(oracle.d)
        self.oracle = oracle
        self.store: dict[int, float] = {}
        self._lock = threading.Lock()

    def _value(self, bits):
        try:
            return self.store[bits]
        except KeyError:
            pass
        value = self.oracle.evaluate(bits)
        with self._lock:
            return self.store.setdefault(bits, value)

    def _values(self, bits):
        bits = np.asarray(bits, dtype=np.int64)
        missing = sorted({int(b) for b in bits if int(b) not in self.store})
        if missing:
            fresh = self.oracle.evaluate_many(np.array(missing, dtype=np.int64))
            with self._lock:
                for b, v in zip(missing, fresh):
                    self.store.setdefault(b, float(v))
        return np.array([self.store[int(b)] for b in bits], dtype=float)

    @property
    def misses(self) -> int:
        return len(self.store)
