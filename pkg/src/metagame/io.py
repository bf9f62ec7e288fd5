"""JSON game documents and result serialization.

Game documents carry ``d`` and ``kind``:

* ``dense_game``: ``values`` of length ``2**d`` indexed by coalition bit
  pattern; optionally ``monomials`` (with ``x`` and ``baseline``) so a
  symbolic model can be rebuilt.
* ``mobius``: ``coefficients`` as ``[[players...], value]`` pairs.
* ``attribution_table``: ``targets`` and ``values``, one array of length
  ``2**(d-1)`` per target, indexed by the bit pattern of ``S - {i}`` with
  players above the target shifted down.

Floats are written with ``repr`` precision, so documents round-trip exactly.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np

from .approx import EstimateWithError
from .coalition import Coalition, Game, MaskedModel, MobiusExpansion, TableGame, enumerate_game
from .exceptions import GameFileError, MissingCoalitionError
from .first_order import AttributionVector
from .interactions import PairIndex, SerialMatrix
from .meta import DirectionalMatrix, ExternalAttributionTable
from .zoo import SymbolicModel

KINDS = ("dense_game", "mobius", "attribution_table")


def game_to_document(obj) -> dict:
    """Serialize a game, Möbius expansion or external attribution table."""
    if isinstance(obj, ExternalAttributionTable):
        return {
            "d": obj.d,
            "kind": "attribution_table",
            "method": obj.method,
            "targets": list(obj.targets),
            "values": [obj.tables[i].tolist() for i in obj.targets],
        }
    if isinstance(obj, MobiusExpansion):
        return {
            "d": obj.d,
            "kind": "mobius",
            "coefficients": [[list(Coalition(b, obj.d).players()), v] for b, v in obj.items()],
        }
    if isinstance(obj, Game):
        doc = {"d": obj.d, "kind": "dense_game", "values": enumerate_game(obj).tolist()}
        if isinstance(obj, MaskedModel) and isinstance(obj.model, SymbolicModel):
            doc["monomials"] = obj.model.to_dict()
            doc["x"] = obj.x.tolist()
            doc["baseline"] = obj.baseline.tolist()
        return doc
    raise TypeError(f"cannot serialize {type(obj).__name__} as a game document")


def _field(doc, name, where):
    if name not in doc:
        raise GameFileError(f"{where}: missing field '{name}'")
    return doc[name]


def document_to_game(doc: dict, where: str = "<document>"):
    """Rebuild the object described by a game document.

    Returns a :class:`MaskedModel` (dense game with monomials), a
    :class:`TableGame`, a :class:`MobiusExpansion` or an
    :class:`ExternalAttributionTable`.
    """
    if not isinstance(doc, dict):
        raise GameFileError(f"{where}: top level must be an object")
    d = _field(doc, "d", where)
    kind = _field(doc, "kind", where)
    if not isinstance(d, int) or not 0 <= d <= 63:
        raise GameFileError(f"{where}: field 'd' must be an integer in [0, 63], got {d!r}")
    if kind not in KINDS:
        raise GameFileError(f"{where}: field 'kind' must be one of {KINDS}, got {kind!r}")
    try:
        if kind == "dense_game":
            values = np.asarray(_field(doc, "values", where), dtype=float)
            if values.ndim != 1 or values.size != 1 << d:
                raise GameFileError(f"{where}: field 'values' must have 2**d = {1 << d} entries, got {values.size}")
            if "monomials" in doc:
                model = SymbolicModel.from_dict(d, doc["monomials"])
                masked = MaskedModel(model, _field(doc, "x", where), _field(doc, "baseline", where))
                return masked
            return TableGame(values)
        if kind == "mobius":
            terms = _field(doc, "coefficients", where)
            exp = MobiusExpansion(d)
            for k, term in enumerate(terms):
                if not (isinstance(term, list) and len(term) == 2):
                    raise GameFileError(f"{where}: coefficients[{k}] must be [players, value]")
                players, value = term
                bits = Coalition.from_players(players, d).bits
                exp.coefficients[bits] = exp.coefficients.get(bits, 0.0) + float(value)
            return exp
        targets = _field(doc, "targets", where)
        values = _field(doc, "values", where)
        if len(targets) != len(values):
            raise GameFileError(f"{where}: 'targets' and 'values' differ in length")
        return ExternalAttributionTable(d, dict(zip(targets, values)), doc.get("method", "External"))
    except (GameFileError, MissingCoalitionError):
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise GameFileError(f"{where}: {exc}") from exc


def read_game(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GameFileError(f"{path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFileError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return document_to_game(doc, str(path))


def write_game(obj, path) -> None:
    Path(path).write_text(json.dumps(game_to_document(obj), indent=1) + "\n")


def _list(a):
    return None if a is None else np.asarray(a, dtype=float).tolist()


def result_to_document(result) -> dict:
    if isinstance(result, DirectionalMatrix):
        return {
            "kind": "directional_matrix",
            "method": result.method,
            "orientation": result.orientation,
            "entries": _list(result.entries),
            "first_order": _list(result.first_order),
            "residuals": _list(result.residuals()),
            "rows": list(result.rows()),
            "stderr": _list(result.stderr),
        }
    if isinstance(result, PairIndex):
        doc = {
            "kind": "pair_index",
            "method": result.method,
            "singles": _list(result.singles),
            "pairs": _list(result.pairs),
        }
        if result.directional is not None:
            doc["directional"] = _list(result.directional)
            doc["orientation"] = "source_to_target_by_row"
        return doc
    if isinstance(result, SerialMatrix):
        return {
            "kind": "serial_matrix",
            "method": result.method,
            "entries": _list(result.entries),
            "first_order": _list(result.first_order),
            "residuals": _list(np.abs(result.row_sums() - result.first_order)),
        }
    if isinstance(result, AttributionVector):
        return {"kind": "attribution_vector", "method": result.method, "values": _list(result.values)}
    if isinstance(result, EstimateWithError):
        return {
            "kind": "estimate",
            "values": _list(result.values),
            "stderr": _list(result.stderr),
            "evaluations_used": result.evaluations_used,
        }
    raise TypeError(f"cannot serialize {type(result).__name__}")


def residuals_from_document(doc: dict) -> np.ndarray:
    """Recompute row residuals from an emitted matrix document."""
    entries = np.asarray(doc["entries"], dtype=float)
    first = np.asarray(doc["first_order"], dtype=float)
    if doc["kind"] == "directional_matrix":
        rows = doc["rows"]
        return np.abs(entries[rows].sum(axis=1) - first[rows])
    return np.abs(entries.sum(axis=1) - first)


def result_to_csv(result) -> str:
    """Flat CSV: ``target,source,value`` for matrices, ``i,j,value`` for pair indices."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(result, (DirectionalMatrix, SerialMatrix)):
        rows = result.rows() if isinstance(result, DirectionalMatrix) else range(result.entries.shape[0])
        w.writerow(["target", "source", "value"])
        for i in rows:
            for j in range(result.entries.shape[1]):
                w.writerow([i, j, repr(float(result.entries[i, j]))])
    elif isinstance(result, PairIndex):
        w.writerow(["i", "j", "value"])
        for i in range(result.d):
            w.writerow([i, i, repr(float(result.singles[i]))])
            for j in range(i + 1, result.d):
                w.writerow([i, j, repr(float(result.pairs[i, j]))])
    elif isinstance(result, (AttributionVector, EstimateWithError)):
        has_err = isinstance(result, EstimateWithError)
        w.writerow(["player", "value"] + (["stderr"] if has_err else []))
        for k, v in enumerate(result.values):
            w.writerow([k, repr(float(v))] + ([repr(float(result.stderr[k]))] if has_err else []))
    else:
        raise TypeError(f"cannot write {type(result).__name__} as CSV")
    return buf.getvalue()


def matrix_from_csv(text: str, d: int) -> np.ndarray:
    """Parse a ``target,source,value`` CSV back into a ``d x d`` array.

    Comment lines (the ``# config:`` header) are skipped; missing rows are zero.
    """
    out = np.zeros((d, d))
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    reader = csv.DictReader(lines)
    for row in reader:
        out[int(row["target"]), int(row["source"])] = float(row["value"])
    return out
