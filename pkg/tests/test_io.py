import json

import numpy as np
import pytest

from conftest import random_masked
from metagame import (
    Budget,
    ExternalAttributionTable,
    GameFileError,
    MaskedModel,
    MobiusExpansion,
    TableGame,
    attribution_table,
    enumerate_game,
    meta_attribution_approx,
    meta_attribution_exact,
    mobius_transform,
    serial_shapley,
    shapley_value_exact,
    stii_pairwise,
)
from metagame.io import (
    document_to_game,
    game_to_document,
    matrix_from_csv,
    read_game,
    residuals_from_document,
    result_to_csv,
    result_to_document,
    write_game,
)


def test_dense_game_roundtrip(tmp_path):
    masked = random_masked(1, 4)
    write_game(masked, tmp_path / "g.json")
    back = read_game(tmp_path / "g.json")
    assert isinstance(back, MaskedModel)
    np.testing.assert_array_equal(enumerate_game(back), enumerate_game(masked))
    table = TableGame(np.random.default_rng(0).normal(size=8))
    write_game(table, tmp_path / "t.json")
    np.testing.assert_array_equal(enumerate_game(read_game(tmp_path / "t.json")), table.values)


def test_mobius_roundtrip(tmp_path):
    exp = mobius_transform(random_masked(2, 5))
    write_game(exp, tmp_path / "m.json")
    back = read_game(tmp_path / "m.json")
    assert isinstance(back, MobiusExpansion)
    assert dict(back.items()) == dict(exp.items())


def test_attribution_table_roundtrip(tmp_path):
    table = attribution_table("gxi", random_masked(3, 4), targets=[0, 2])
    write_game(table, tmp_path / "a.json")
    back = read_game(tmp_path / "a.json")
    assert isinstance(back, ExternalAttributionTable)
    assert back.targets == (0, 2)
    for i in back.targets:
        np.testing.assert_array_equal(back.tables[i], table.tables[i])


def test_parse_errors_carry_locations(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"d": 2,\n "kind": "dense_game",\n "values": [0, 1, 2\n')
    with pytest.raises(GameFileError, match=r"bad\.json:4:"):
        read_game(path)
    with pytest.raises(GameFileError, match="'values' must have"):
        document_to_game({"d": 2, "kind": "dense_game", "values": [0, 1]})
    with pytest.raises(GameFileError, match="missing field 'kind'"):
        document_to_game({"d": 2})
    with pytest.raises(GameFileError, match="kind"):
        document_to_game({"d": 2, "kind": "spreadsheet"})
    with pytest.raises(GameFileError):
        document_to_game({"d": 2, "kind": "mobius", "coefficients": [[[5], 1.0]]})
    with pytest.raises(GameFileError):
        read_game(tmp_path / "absent.json")


def test_missing_coalition_in_table_document():
    doc = {"d": 3, "kind": "attribution_table", "targets": [1], "values": [[0.0, 1.0, 2.0]]}
    with pytest.raises(KeyError, match="coalition"):
        document_to_game(doc)


def _residuals_roundtrip(result):
    doc = json.loads(json.dumps(result_to_document(result)))
    np.testing.assert_array_equal(residuals_from_document(doc), np.asarray(doc["residuals"]))


def test_embedded_residuals_are_reproducible():
    masked = random_masked(5, 5)
    _residuals_roundtrip(meta_attribution_exact("ig", masked))
    _residuals_roundtrip(meta_attribution_exact("sv", masked, targets=[1, 4]))
    _residuals_roundtrip(meta_attribution_approx("sv", masked, Budget(120, 1)))
    _residuals_roundtrip(serial_shapley(masked))


def test_directional_document_fields():
    dm = meta_attribution_approx("gxi", random_masked(5, 4), Budget(50, 1))
    doc = result_to_document(dm)
    assert doc["orientation"] == "source_to_target_by_row"
    assert doc["method"] == "Meta-GxI"
    assert len(doc["stderr"]) == 4


def test_csv_roundtrip_is_exact():
    dm = meta_attribution_exact("gxi", random_masked(6, 4))
    text = result_to_csv(dm)
    assert text.splitlines()[0] == "target,source,value"
    np.testing.assert_array_equal(matrix_from_csv("# comment\n" + text, 4), dm.entries)


def test_other_csv_layouts():
    masked = random_masked(6, 3)
    assert result_to_csv(stii_pairwise(masked)).splitlines()[0] == "i,j,value"
    assert len(result_to_csv(stii_pairwise(masked)).splitlines()) == 1 + 3 + 3
    assert result_to_csv(shapley_value_exact(masked)).splitlines()[0] == "player,value"


def test_document_values_keep_full_precision():
    doc = game_to_document(TableGame([0.1, 1 / 3]))
    assert json.loads(json.dumps(doc))["values"] == [0.1, 1 / 3]
