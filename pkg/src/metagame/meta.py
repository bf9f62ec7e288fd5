"""Directional meta-attributions.

For a target player ``i`` the *metagame* is the ``(d-1)``-player game
``nu_i(S) = phi_i(S + {i})`` over the remaining players. The influence of
``j`` on the attribution of ``i`` is the Shapley value of ``j`` in ``nu_i``;
the pure individual effect is ``nu_i({})``. Rows of the resulting matrix sum
to the first-order attribution ``phi_i``.

Matrices are oriented ``entries[target, source]``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coalition import Game, MaskedModel, check_capacity, insert_bit, remove_bit
from .exceptions import InvalidArgumentError, MissingCoalitionError
from .first_order import AttributionMethod, get_method, shapley_from_table
from .interactions import PairIndex, stii_pair_from_table

ORIENTATION = "source_to_target_by_row"


@dataclass
class DirectionalMatrix:
    """``entries[i, j]`` is the influence of source ``j`` on the attribution of target ``i``."""

    entries: np.ndarray
    method: str
    first_order: np.ndarray
    stderr: np.ndarray | None = None
    targets: tuple[int, ...] | None = None
    evaluations_used: dict[int, int] | None = None
    orientation: str = field(default=ORIENTATION, init=False)

    @property
    def d(self) -> int:
        return self.entries.shape[1]

    def rows(self) -> tuple[int, ...]:
        return self.targets if self.targets is not None else tuple(range(self.d))

    def residuals(self) -> np.ndarray:
        return check_hierarchical_efficiency(self)


class ExternalAttributionTable:
    """Externally computed restricted attributions ``phi_i(S + {i})``.

    ``tables[i]`` has length ``2**(d-1)`` and is indexed by the bit pattern of
    ``S`` over the players other than ``i``, with players above ``i`` shifted
    down one position (see :func:`metagame.coalition.insert_bit`).
    """

    def __init__(self, d: int, tables: dict[int, Sequence[float]], method: str = "External"):
        self.d = int(d)
        self.method = method
        self.tables: dict[int, np.ndarray] = {}
        expected = 1 << (self.d - 1)
        for i, values in sorted(tables.items()):
            i = int(i)
            if not 0 <= i < self.d:
                raise InvalidArgumentError(f"target {i} outside [0, {self.d})")
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 1 or arr.size != expected:
                missing = min(arr.size, expected) if arr.ndim == 1 else 0
                S = insert_bit(missing, i)
                raise MissingCoalitionError(
                    f"attribution table for target {i} has {arr.size} entries, expected {expected}; "
                    f"first absent coalition {_players(S, self.d)} (contains target {i})"
                )
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                S = insert_bit(int(bad[0]), i)
                raise MissingCoalitionError(
                    f"attribution table for target {i} lacks a value for coalition {_players(S, self.d)}"
                )
            self.tables[i] = arr

    @property
    def targets(self) -> tuple[int, ...]:
        return tuple(self.tables)

    def value(self, S_bits: int, i: int) -> float:
        if not S_bits >> i & 1:
            raise InvalidArgumentError(f"coalition must contain target {i}")
        if i not in self.tables:
            raise MissingCoalitionError(f"no attribution table for target {i}")
        return float(self.tables[i][remove_bit(S_bits, i)])

    def target_table(self, i: int) -> np.ndarray:
        if i not in self.tables:
            raise MissingCoalitionError(f"no attribution table for target {i}")
        return self.tables[i]


def _players(bits: int, d: int) -> list[int]:
    return [k for k in range(d) if bits >> k & 1]


def attribution_table(method, masked: MaskedModel, targets: Sequence[int] | None = None) -> ExternalAttributionTable:
    """Enumerate ``phi_i(S + {i})`` for every target into an :class:`ExternalAttributionTable`."""
    method = get_method(method)
    check_capacity(masked.d)
    targets = range(masked.d) if targets is None else targets
    cache: dict = {}
    tables = {int(i): method.target_table(masked, int(i), cache) for i in targets}
    return ExternalAttributionTable(masked.d, tables, method.name)


class MetaGameOracle(Game):
    """The metagame of target ``i`` as a ``(d-1)``-player game."""

    def __init__(self, target: int, method: AttributionMethod | None = None, masked: MaskedModel | None = None,
                 table: ExternalAttributionTable | None = None):
        source = table if table is not None else masked
        if source is None:
            raise InvalidArgumentError("metagame needs a masked model or an external table")
        if not 0 <= target < source.d:
            raise InvalidArgumentError(f"target {target} outside [0, {source.d})")
        super().__init__(source.d - 1)
        self.target = target
        self.method = get_method(method) if table is None else None
        self.masked = masked
        self.table = table

    def _value(self, bits):
        full = insert_bit(int(bits), self.target)
        if self.table is not None:
            return self.table.value(full, self.target)
        return self.method.restricted(self.masked, full, self.target)

    def _values(self, bits):
        if self.table is not None:
            return self.table.target_table(self.target)[np.asarray(bits)]
        full = np.array([insert_bit(int(b), self.target) for b in bits], dtype=np.int64)
        return self.method._restricted_many(self.masked, full, self.target)


def _row_from_table(nu: np.ndarray, i: int, d: int) -> np.ndarray:
    row = np.empty(d)
    row[i] = nu[0]
    if d > 1:
        phi = shapley_from_table(nu)
        row[:i] = phi[:i]
        row[i + 1:] = phi[i:]
    return row


def _resolve_source(method, source):
    if isinstance(source, ExternalAttributionTable):
        return None, source
    return get_method(method), source


def meta_attribution_exact(method, source, targets: Sequence[int] | None = None,
                           threads: int = 1, limit: int | None = None) -> DirectionalMatrix:
    """Exact directional meta-attributions.

    Parameters
    ----------
    method : str or AttributionMethod
        Base first-order method (``"sv"``, ``"gxi"``, ``"ig"``). Ignored when
        ``source`` is an :class:`ExternalAttributionTable`.
    source : MaskedModel, Game or ExternalAttributionTable
        Gradient methods need a :class:`MaskedModel`; the Shapley base works on
        any game.
    targets : sequence of int, optional
        Rows to compute; defaults to all players (or all tabulated targets).
    threads : int
        Targets are independent and may be processed concurrently.

    Each target's restricted attributions are computed in one sweep over the
    coalitions containing it and shared by every source ``j``.
    """
    method, src = _resolve_source(method, source)
    d = src.d
    check_capacity(d, limit)
    if targets is None:
        targets = src.targets if method is None else tuple(range(d))
    targets = tuple(int(i) for i in targets)
    for i in targets:
        if not 0 <= i < d:
            raise InvalidArgumentError(f"target {i} outside [0, {d})")

    cache: dict = {}
    if method is not None and method.name == "SV" and len(targets) > 1:
        # warm the shared enumeration before fanning out
        method.target_table(src, targets[0], cache)

    def row(i):
        nu = src.target_table(i) if method is None else method.target_table(src, i, cache)
        return _row_from_table(nu, i, d), nu[-1]

    if threads > 1 and len(targets) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(row, targets))
    else:
        results = [row(i) for i in targets]

    entries = np.zeros((d, d))
    first = np.zeros(d)
    for i, (r, total) in zip(targets, results):
        entries[i] = r
        first[i] = total
    name = src.method if method is None else method.name
    full_rows = targets == tuple(range(d))
    return DirectionalMatrix(entries, f"Meta-{name}", first, targets=None if full_rows else targets)


def check_hierarchical_efficiency(dm: DirectionalMatrix) -> np.ndarray:
    """``|sum_j entries[i, j] - first_order[i]|`` for each computed row."""
    rows = list(dm.rows())
    return np.abs(dm.entries[rows].sum(axis=1) - dm.first_order[rows])


def symmetrize(dm: DirectionalMatrix) -> PairIndex:
    """Set-based index ``pairs[i, j] = entries[i, j] + entries[j, i]`` with the diagonal as singles."""
    E = dm.entries
    return PairIndex(np.diag(E).copy(), E + E.T, f"sym({dm.method})")


def meta_pair_interaction(method, source, i: int, pair: tuple[int, int]) -> float:
    """Pairwise Shapley-Taylor interaction of sources ``j, k`` inside target ``i``'s metagame."""
    j, k = pair
    method, src = _resolve_source(method, source)
    d = src.d
    check_capacity(d)
    if len({i, j, k}) != 3 or not all(0 <= p < d for p in (i, j, k)):
        raise InvalidArgumentError("need a target and two distinct other players")
    nu = src.target_table(i) if method is None else method.target_table(src, i)
    cj = j if j < i else j - 1
    ck = k if k < i else k - 1
    return stii_pair_from_table(nu, cj, ck)
