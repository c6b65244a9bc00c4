import json

import numpy as np
import pytest
from hypothesis import given

from adaptslam.graph import (
    EdgeCategory,
    GraphError,
    KeyframeRecord,
    PoseGraph,
    build_laplacian,
    ingest,
    load_graph,
    parse_record,
    read_stream,
    reduce,
    total_edge_weight,
)

from conftest import connected_graphs


def loop_laplacian(graph, order):
    """Double loop over node pairs, summing every parallel edge."""
    n = len(order)
    L = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            w = 0.0
            for e in graph.edges:
                if {e.head, e.tail} == {order[i], order[j]}:
                    w += e.weight
            L[i][j] -= w
            L[i][i] += w
    return np.array(L)


@given(connected_graphs())
def test_laplacian_matches_loop_oracle(g):
    order = list(g.nodes)
    assert np.allclose(build_laplacian(g, order), loop_laplacian(g, order), rtol=0, atol=1e-9)


@given(connected_graphs())
def test_laplacian_rows_sum_to_zero_and_symmetric(g):
    L = build_laplacian(g, g.nodes)
    assert np.allclose(L, L.T)
    assert np.allclose(L.sum(axis=1), 0.0, atol=1e-8)


def test_subset_laplacian_ignores_outside_edges():
    g = PoseGraph.from_edges(range(3), [(0, 1, 2.0), (1, 2, 5.0)])
    L = build_laplacian(g, [0, 1])
    assert L.tolist() == [[2.0, -2.0], [-2.0, 2.0]]


def test_parallel_edges_are_summed():
    g = PoseGraph.from_edges(range(2), [(0, 1, "imu", 500.0), (0, 1, "vis", 7.0)])
    assert total_edge_weight(g, 0, 1) == 507.0
    assert len(g.edges) == 2


def test_duplicate_edge_same_category_rejected():
    g = PoseGraph.from_edges(range(2), [(0, 1, 3.0)])
    with pytest.raises(GraphError, match="duplicate"):
        g.add_edge(0, 1, EdgeCategory.COVIS, 4.0)


@pytest.mark.parametrize("w", [0.0, 0.5, -1.0])
def test_weight_below_one_rejected(w):
    with pytest.raises(GraphError):
        PoseGraph.from_edges(range(2), [(0, 1, w)])


def test_self_loop_and_unknown_node_rejected():
    with pytest.raises(GraphError, match="self-loop"):
        PoseGraph.from_edges(range(2), [(1, 1, 2.0)])
    with pytest.raises(GraphError, match="unknown"):
        PoseGraph.from_edges(range(2), [(0, 5, 2.0)])


def test_imu_edge_must_join_consecutive_keyframes():
    with pytest.raises(GraphError, match="non-consecutive"):
        PoseGraph.from_edges(range(3), [(0, 2, "imu", 500.0)])


def test_reduce_errors():
    L = np.eye(3)
    assert reduce(L, [0]).shape == (2, 2)
    with pytest.raises(GraphError):
        reduce(L, [])
    with pytest.raises(GraphError):
        reduce(L, [3])
    with pytest.raises(GraphError):
        reduce(L, [0, 1, 2])


def test_laplacian_unknown_or_duplicate_node():
    g = PoseGraph.from_edges(range(2), [(0, 1, 2.0)])
    with pytest.raises(GraphError):
        build_laplacian(g, [0, 7])
    with pytest.raises(GraphError):
        build_laplacian(g, [0, 0])


def test_ingest_adds_imu_and_covis_edges():
    g = PoseGraph()
    ingest(g, KeyframeRecord(0, 0.0))
    ingest(g, KeyframeRecord(1, 0.5, True, ((0, 12),)), imu_weight=500.0)
    assert total_edge_weight(g, 0, 1) == 512.0
    with pytest.raises(GraphError):
        ingest(g, KeyframeRecord(1, 1.0))


def test_ingest_skips_zero_covisibility():
    g = PoseGraph()
    ingest(g, KeyframeRecord(0, 0.0))
    ingest(g, KeyframeRecord(1, 0.5, False, ((0, 0),)))
    assert g.edges == []


def test_parse_record_reports_line():
    rec = parse_record('{"id": 3, "timestamp_s": 1.5, "imu_to_prev": true, "covis": [[1, 4]], "global": true}')
    assert rec == KeyframeRecord(3, 1.5, True, ((1, 4),), True)
    with pytest.raises(GraphError, match="line 7"):
        parse_record("{not json", lineno=7)
    with pytest.raises(GraphError, match="line 2"):
        parse_record('{"timestamp_s": 3}', lineno=2)


def test_read_stream_rejects_time_travel(tmp_path):
    p = tmp_path / "s.jsonl"
    rows = [{"id": 0, "timestamp_s": 1.0, "imu_to_prev": False, "covis": []},
            {"id": 1, "timestamp_s": 0.5, "imu_to_prev": False, "covis": []}]
    p.write_text("\n".join(json.dumps(r) for r in rows))
    with pytest.raises(GraphError):
        read_stream(p)


def test_load_graph_roundtrip(tmp_path):
    p = tmp_path / "s.jsonl"
    p.write_text('{"id": 0, "timestamp_s": 0, "imu_to_prev": false, "covis": []}\n'
                 '{"id": 1, "timestamp_s": 1, "imu_to_prev": true, "covis": [[0, 3]]}\n')
    g, recs = load_graph(p, imu_weight=10.0)
    assert g.nodes == [0, 1] and len(recs) == 2
    assert total_edge_weight(g, 0, 1) == 13.0
