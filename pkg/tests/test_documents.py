import json
from fractions import Fraction

import pytest

from shadowing.analyze import modulus_table
from shadowing.core import INF, ContinuityClass, NonautonomousSystem, SystemMap
from shadowing.documents import (
    DocumentError,
    load_system,
    load_table,
    pseudo_orbit_from_document,
    read_json,
    save_results,
    system_from_document,
    system_to_document,
    table_from_csv,
    table_to_csv,
)
from shadowing.pseudo import decide_shadowing, epsilon_probes


def _doc(**over):
    doc = {"labels": ["a", "b", "c"], "metric": {"matrix": [[0, "1/2", 1], ["1/2", 0, "1/2"], [1, "1/2", 0]]},
           "map": ["b", "c", 2]}
    doc.update(over)
    return doc


def test_matrix_document():
    loaded = system_from_document(_doc(**{"class": "lip:2"}))
    assert loaded.autonomous
    assert loaded.system.image == (1, 2, 2)
    assert loaded.space.d(0, 1) == Fraction(1, 2)
    assert loaded.cls == ContinuityClass(Fraction(2))


def test_embedded_metrics():
    coords = {"coords": [[0, 0], [3, 4], [0, 4]], "norm": "L2"}
    s = system_from_document(_doc(metric={"embedded": coords})).space
    assert s.d(0, 1) == 5 and s.d(1, 2) == 3
    s = system_from_document(_doc(metric={"embedded": dict(coords, norm="L1")})).space
    assert s.d(0, 1) == 7
    s = system_from_document(_doc(metric={"embedded": dict(coords, norm="Linf")})).space
    assert s.d(0, 1) == 4
    s = system_from_document(_doc(metric={"embedded": {"coords": [0, "1/4", "7/8"], "norm": "circle"}})).space
    assert s.d(0, 2) == Fraction(1, 8)
    with pytest.raises(DocumentError, match="irrational"):
        system_from_document(_doc(metric={"embedded": {"coords": [[0, 0], [1, 1], [0, 1]], "norm": "L2"}}))


@pytest.mark.parametrize("over,where", [
    ({"metric": {"matrix": [[0, 1, 1], [2, 0, 1], [1, 1, 0]]}}, "symmetry"),
    ({"metric": {"matrix": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]}}, "triangle"),
    ({"metric": {"matrix": [[0, 1], [1, 0]]}}, "metric.matrix"),
    ({"metric": {"matrix": [[0, 0.5, 1], [0.5, 0, 1], [1, 1, 0]]}}, "metric.matrix[0][1]"),
    ({"map": ["b", "z", 0]}, "map[1]"),
    ({"map": [0, 1, 7]}, "map[2]"),
    ({"labels": ["a", "a", "c"]}, "labels"),
    ({"class": "lip:x"}, "class"),
])
def test_invalid_documents(over, where):
    with pytest.raises(DocumentError, match=where.replace("[", r"\[").replace("]", r"\]")):
        system_from_document(_doc(**over))


def test_roundtrips(tmp_path, rotation4):
    F = NonautonomousSystem((rotation4,), (SystemMap.identity(rotation4.space), rotation4))
    for system, cls in ((rotation4, ContinuityClass(Fraction(3, 2))), (F, ContinuityClass())):
        path = tmp_path / "sys.json"
        save_results(system_to_document(system, cls), path)
        loaded = load_system(path)
        assert loaded.system == system and loaded.cls == cls
        assert loaded.space == rotation4.space


def test_json_parse_error_has_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"labels": [\n  "a",,\n]}')
    with pytest.raises(DocumentError, match=r"bad.json:2:"):
        read_json(path)


def test_table_csv_roundtrip(tmp_path, rotation4):
    table = modulus_table(rotation4, epsilon_probes(rotation4.space))
    text = table_to_csv(table)
    assert text.splitlines()[0] == "epsilon,delta_shadow,delta_struct,delta_fg,delta_cg,delta_usc"
    assert text.splitlines()[-1] == "3/2,inf,inf,inf,inf,inf"
    assert table_from_csv(text) == table
    save_results(table, tmp_path / "t.csv")
    assert load_table(tmp_path / "t.csv").rows[-1]["delta_shadow"] == INF


def test_witness_roundtrip(tmp_path, rotation4):
    verdict = decide_shadowing(rotation4, Fraction(2, 5), Fraction(3, 10))
    path = save_results(verdict, tmp_path / "w.json", labels=rotation4.space.labels)
    doc = json.loads(path.read_text())
    po = pseudo_orbit_from_document(doc, rotation4.space)
    assert po.preperiod == (0, 0, 0, 0) and po.delta == Fraction(3, 10)
    with pytest.raises(DocumentError):
        pseudo_orbit_from_document({"preperiod": ["9"]}, rotation4.space)
