import json
from pathlib import Path

import numpy as np
import pytest

from got_align.errors import IndexOutOfRange, InconsistentIndicator, MissingFile, ParseError
from got_align.graph import Graph
from got_align.io import (
    SCHEMA_VERSION,
    read_edge_list,
    read_result,
    read_tu_collection,
    write_edge_list,
    write_result,
    write_table,
)
from got_align.optimizer import AlignConfig, align

from conftest import random_graph

DATA = Path(__file__).parent / "data"


def test_edge_list_roundtrip(tmp_path, rng):
    for k in range(100):
        g = random_graph(rng, int(rng.integers(1, 9)), weighted=True, connected=False)
        path = tmp_path / f"g{k}.txt"
        write_edge_list(g, path)
        assert read_edge_list(path) == g


def test_edge_list_roundtrip_with_labels(tmp_path):
    g = Graph.from_edges(3, [(0, 1, 0.25)], node_labels=[1, 0, 1], graph_label=3)
    write_edge_list(g, tmp_path / "g.txt")
    h = read_edge_list(tmp_path / "g.txt")
    assert h == g and h.graph_label == 3


def test_edge_list_minimal(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# n=2\n0 1 1.5\n")
    g = read_edge_list(p)
    assert g.n == 2 and g.weights[0, 1] == 1.5


@pytest.mark.parametrize(
    "body, line, exc",
    [
        ("# n=2\n0 x 1\n", 2, ParseError),
        ("0 1 1\n", 1, ParseError),
        ("# n=2\n\n0 5 1\n", 3, IndexOutOfRange),
        ("# n=2\n0 0 1\n", 2, ParseError),
        ("# n=2\n0 1 1\n1 0 2\n", 3, ParseError),
        ("# n=2\n0 1 nan\n", 2, ParseError),
        ("# n=2\n0 1 -1\n", 2, ParseError),
        ("# n=2\n0 1 2 3\n", 2, ParseError),
    ],
)
def test_edge_list_errors(tmp_path, body, line, exc):
    p = tmp_path / "bad.txt"
    p.write_text(body)
    with pytest.raises(exc) as info:
        read_edge_list(p)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_edge_list_missing(tmp_path):
    with pytest.raises(MissingFile):
        read_edge_list(tmp_path / "nope.txt")


def test_tu_minimal_fixture():
    coll = read_tu_collection(DATA / "TINY", "TINY")
    assert [g.n for g in coll.graphs] == [2, 3]
    np.testing.assert_array_equal(coll.labels, [1, 0])
    # the edge listed in both directions is one undirected unit edge
    np.testing.assert_array_equal(coll.graphs[0].weights, [[0, 1], [1, 0]])
    assert coll.graphs[1].num_edges == 3


def test_tu_ptc_fixture():
    coll = read_tu_collection(DATA / "PTC10", "PTC10")
    assert len(coll) == 10
    assert sorted(set(coll.labels.tolist())) == [0, 1]
    assert all(g.is_connected() for g in coll.graphs)
    sub = coll.subsample(4, seed=1)
    assert len(sub) == 4 and sub.subsample(4, seed=0).labels.tolist() == sub.labels.tolist()


def test_tu_spanning_edge(tmp_path):
    (tmp_path / "X_A.txt").write_text("1, 3\n")
    (tmp_path / "X_graph_indicator.txt").write_text("1\n1\n2\n")
    (tmp_path / "X_graph_labels.txt").write_text("0\n1\n")
    with pytest.raises(InconsistentIndicator):
        read_tu_collection(tmp_path, "X")


def test_tu_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        read_tu_collection(tmp_path, "X")


def test_result_roundtrip(tmp_path, rng):
    g1, g2 = random_graph(rng, 3), random_graph(rng, 5)
    res = align(g1, g2, AlignConfig(sgd_iters=5))
    write_result(res, tmp_path / "r.json")
    rec = read_result(tmp_path / "r.json")
    assert list(rec)[0] == "schema_version" and rec["schema_version"] == SCHEMA_VERSION
    assert rec["w2"] == res.w2
    assert rec["config"]["tau"] == 3
    np.testing.assert_array_equal(rec["soft_assignment"], res.soft.matrix)


def test_result_rejects_nan_and_bad_schema(tmp_path):
    with pytest.raises(OSError):
        write_result({"x": float("nan")}, tmp_path / "r.json")
    (tmp_path / "s.json").write_text(json.dumps({"schema_version": "0"}))
    with pytest.raises(ParseError):
        read_result(tmp_path / "s.json")


def test_write_table(tmp_path):
    write_table([{"a": 1, "b": 0.5}, {"a": 2, "b": 0.25}], tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == "a,b\n1,0.5\n2,0.25\n"
