from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hon.corpora import photo_loop
from hon.errors import EmptyInput, UniverseMismatch
from hon.network import HONetwork, HONode, build_first_order, build_network
from hon.rank import RankVector, aggregate_scores, format_delta, pagerank, rank_delta
from hon.rules import ExtractionParams, extract_rules

N = HONode.from_label


def network(edge_map):
    g = HONetwork()
    for (s, t), w in edge_map.items():
        g.edges.setdefault(N(s), {})[N(t)] = w
    return g


def linear_solve(g, d, teleport="node"):
    nodes = g.nodes
    n = len(nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    if teleport == "node":
        u = np.full(n, 1.0 / n)
    else:
        ents = sorted({v.entity for v in nodes})
        per = {e: sum(v.entity == e for v in nodes) for e in ents}
        u = np.array([1.0 / (len(ents) * per[v.entity]) for v in nodes])
    P = np.zeros((n, n))
    for s, targets in g.edges.items():
        total = sum(targets.values())
        for t, w in targets.items():
            P[idx[s], idx[t]] = w / total
    dangling = P.sum(axis=1) == 0
    P[dangling] = u
    r = np.linalg.solve(np.eye(n) - d * P.T, (1 - d) * u)
    return dict(zip(nodes, r / r.sum()))


def test_single_node():
    g = HONetwork(extra_nodes={N("a")})
    assert pagerank(g).entity_scores == {"a": pytest.approx(1.0)}


def test_symmetric_pair():
    rv = pagerank(network({("a", "b"): 1, ("b", "a"): 1}))
    assert rv.entity_scores["a"] == pytest.approx(0.5, abs=1e-12)


def test_empty():
    with pytest.raises(EmptyInput):
        pagerank(HONetwork())


def test_four_node_oracle():
    g = network({("a", "b"): 3, ("a", "c"): 1, ("b", "c"): 2, ("c", "a"): 1, ("c", "d"): 4})
    rv = pagerank(g)
    oracle = linear_solve(g, 0.85)
    for node, score in oracle.items():
        assert abs(rv.node_scores[node] - score) <= 1e-9


labels = ["a", "b", "c", "a|b", "b|c", "c|a"]
graphs = st.integers(1, 6).flatmap(
    lambda n: st.dictionaries(
        st.tuples(st.sampled_from(labels[:n]), st.sampled_from(labels[:n])),
        st.integers(1, 20),
        min_size=1,
        max_size=n * n,
    )
)


@settings(max_examples=100, deadline=None)
@given(graphs, st.sampled_from([0.5, 0.85, 0.95]), st.sampled_from(["node", "entity"]))
def test_power_iteration_matches_linear_solve(edge_map, d, teleport):
    g = network(edge_map)
    # convergence slows as d approaches 1; 0.95**1000 is far below tol
    rv = pagerank(g, damping=d, teleport=teleport, max_iter=1000)
    oracle = linear_solve(g, d, teleport)
    for node, score in oracle.items():
        assert abs(rv.node_scores[node] - score) <= 1e-9
    assert abs(sum(rv.node_scores.values()) - 1.0) <= 1e-9
    assert abs(sum(rv.entity_scores.values()) - 1.0) <= 1e-9


def test_aggregate():
    rv = RankVector({N("Singapore|Tokyo"): 0.3, N("Singapore|Shanghai"): 0.2, N("Tokyo"): 0.5}, {}, 0.85, "node")
    assert aggregate_scores(rv) == {"Singapore": 0.5, "Tokyo": 0.5}


def test_first_order_identity():
    g = network({("a", "b"): 1, ("b", "c"): 2, ("c", "a"): 1})
    rv = pagerank(g)
    assert rv.entity_scores == {n.entity: s for n, s in rv.node_scores.items()}


def test_order_one_equivalence():
    ts = photo_loop()
    a = pagerank(build_network(extract_rules(ts, ExtractionParams(1, 5)))).entity_scores
    b = pagerank(build_first_order(ts, 5)).entity_scores
    assert a.keys() == b.keys()
    assert all(abs(a[k] - b[k]) <= 1e-12 for k in a)


@pytest.mark.parametrize("teleport", ["node", "entity"])
def test_photo_pages_gain(teleport):
    ts = photo_loop()
    first = pagerank(build_first_order(ts, 5), teleport=teleport).entity_scores
    hon = pagerank(build_network(extract_rules(ts, ExtractionParams(5, 5))), teleport=teleport).entity_scores
    assert hon["view"] > first["view"]
    assert hon["upload"] > first["upload"]
    top = [row[0] for row in rank_delta(first, hon) if row[3] > 0][:2]
    assert set(top) == {"view", "upload"}


def test_rank_delta():
    same = {"a": 0.6, "b": 0.4}
    assert all(r[3] == 0 and r[4] == 0 for r in rank_delta(same, same))
    rows = rank_delta({"a": 0.6, "b": 0.4}, {"a": 0.4, "b": 0.6})
    assert {r[0]: r[3] for r in rows} == {"a": pytest.approx(-0.2), "b": pytest.approx(0.2)}
    assert {r[0]: r[4] for r in rows} == {"a": -1.0, "b": 0.5}
    with pytest.raises(UniverseMismatch):
        rank_delta({"a": 1.0}, {"b": 1.0})


def test_csv_formats():
    rv = pagerank(network({("a", "b"): 1, ("b", "a"): 1}))
    assert rv.to_csv().splitlines()[0] == "entity,score,rank"
    assert rv.to_csv().splitlines()[1].endswith(",1")
    assert format_delta(rank_delta({"a": 1.0}, {"a": 1.0})) == (
        "entity,score_base,score_other,delta,rel_rank_change\na,1.0,1.0,0.0,0.0\n"
    )
