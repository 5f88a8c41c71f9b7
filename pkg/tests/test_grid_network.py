import json

import pytest

from evhc.grid import NetworkError, ieee33, load_network


def _two_bus_doc():
    return {
        "base_mva": 10.0, "base_kv": 12.66, "v_slack": 1.0,
        "v_min": 0.9, "v_max": 1.1,
        "buses": [
            {"id": 1, "kind": "slack", "p_load": 0.0, "q_load": 0.0},
            {"id": 2, "kind": "load", "p_load": 0.01, "q_load": 0.005},
        ],
        "lines": [{"from": 1, "to": 2, "r": 0.01, "x": 0.02, "i_max": 2.0}],
    }


def test_bundled_ieee33_case():
    net = ieee33()
    assert net.n_bus == 33
    assert net.n_line == 32
    stations = net.station_buses
    assert len(stations) == 12
    assert sorted(stations.values()) == [5, 8, 10, 12, 14, 16, 18, 22, 25, 27, 30, 33]
    assert net.v_min == 0.9
    assert net.slack == 1


def test_two_bus_minimal_radial():
    net = load_network(_two_bus_doc())
    assert net.n_line == net.n_bus - 1


def test_cycle_rejected():
    doc = _two_bus_doc()
    doc["buses"].append({"id": 3, "kind": "load", "p_load": 0.0, "q_load": 0.0})
    doc["lines"] += [
        {"from": 2, "to": 3, "r": 0.01, "x": 0.02, "i_max": 2.0},
        {"from": 3, "to": 1, "r": 0.01, "x": 0.02, "i_max": 2.0},
    ]
    with pytest.raises(NetworkError, match="non-radial"):
        load_network(doc)


def test_disconnected_rejected():
    doc = _two_bus_doc()
    doc["buses"] += [
        {"id": 3, "kind": "load", "p_load": 0.0, "q_load": 0.0},
        {"id": 4, "kind": "load", "p_load": 0.0, "q_load": 0.0},
    ]
    doc["lines"].append({"from": 3, "to": 4, "r": 0.01, "x": 0.02, "i_max": 2.0})
    with pytest.raises(NetworkError):
        load_network(doc)


def test_duplicate_bus_ids_rejected():
    doc = _two_bus_doc()
    doc["buses"][1]["id"] = 1
    with pytest.raises(NetworkError):
        load_network(doc)


def test_two_slacks_rejected():
    doc = _two_bus_doc()
    doc["buses"][1]["kind"] = "slack"
    with pytest.raises(NetworkError, match="slack"):
        load_network(doc)


def test_parse_failure_propagates(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(json.JSONDecodeError):
        load_network(bad)


def test_lines_reoriented_from_slack():
    doc = _two_bus_doc()
    doc["lines"][0]["from"], doc["lines"][0]["to"] = 2, 1
    net = load_network(doc)
    assert net.lines[0].from_bus == 1 and net.lines[0].to_bus == 2
