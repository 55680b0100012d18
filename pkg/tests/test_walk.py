from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import traj
from hon.corpora import alternation, canal, round_trips
from hon.errors import EmptyInput, UnknownEntity
from hon.network import HONetwork, HONode, build_first_order, build_network, make_builder
from hon.rules import ExtractionParams, extract_rules
from hon.synth import GridConfig, generate_manifest, generate_trajectories
from hon.walk import (
    WalkState,
    entropy_rate,
    evaluate_accuracy,
    locate_context,
    return_probability,
    simulate_walk,
    split_holdout,
    stationary_distribution,
    transition_distribution,
)

N = HONode.from_label


def network(edge_map):
    g = HONetwork()
    for (s, t), w in edge_map.items():
        g.edges.setdefault(N(s), {})[N(t)] = w
    return g


def dense(g):
    """Row-stochastic matrix (zero rows for dangling nodes) in label order."""
    nodes = g.nodes
    idx = {n: i for i, n in enumerate(nodes)}
    P = np.zeros((len(nodes), len(nodes)))
    for s, targets in g.edges.items():
        total = sum(targets.values())
        for t, w in targets.items():
            P[idx[s], idx[t]] = w / total
    return nodes, P


def smoothed_stationary(P, beta):
    n = len(P)
    G = P.copy()
    G[G.sum(axis=1) == 0] = 1.0 / n
    G = (1 - beta) * G + beta / n
    vals, vecs = np.linalg.eig(G.T)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    return v / v.sum()


FIG_S2 = {
    ("Shanghai", "Singapore|Shanghai"): 10,
    ("Singapore", "LosAngeles"): 5,
    ("Singapore", "Seattle"): 5,
    ("Singapore|Shanghai", "LosAngeles"): 7,
    ("Singapore|Shanghai", "Seattle"): 3,
}


def test_transition_distribution():
    g = network({("n", "x"): 3, ("n", "y"): 1, ("x", "y"): 2})
    assert transition_distribution(g, N("n")) == {N("x"): 0.75, N("y"): 0.25}
    assert transition_distribution(g, N("x")) == {N("y"): 1.0}
    assert transition_distribution(g, N("y")) == {}
    d = transition_distribution(network(FIG_S2), N("Singapore|Shanghai"))
    assert d == {N("LosAngeles"): 0.7, N("Seattle"): 0.3}


def test_locate_context():
    g = network(FIG_S2)
    assert locate_context(g, ["Tokyo", "Shanghai", "Singapore"]) == N("Singapore|Shanghai")
    assert locate_context(g, ["Singapore"]) == N("Singapore")
    with pytest.raises(UnknownEntity):
        locate_context(g, ["Tokyo"])
    c = build_network(extract_rules(canal(), ExtractionParams(3, 3)))
    assert locate_context(c, ["e", "f", "g"]) == N("g|f,e")
    assert locate_context(c, ["x", "f", "g"]) == N("g")


def test_simulate_chain_and_dangling():
    g = network({("a", "b"): 1, ("b", "c"): 1})
    assert simulate_walk(g, WalkState(N("a"), seed=0), 2) == ["b", "c"]
    assert simulate_walk(g, WalkState(N("a"), seed=0), 5) == ["b", "c"]
    assert simulate_walk(g, WalkState(N("c"), seed=0), 3) == []


def test_simulate_deterministic_and_streams_differ():
    g = network({("a", "b"): 1, ("a", "c"): 1, ("b", "a"): 1, ("c", "a"): 1})
    w1 = simulate_walk(g, WalkState(N("a"), 7, (1,)), 40)
    assert w1 == simulate_walk(g, WalkState(N("a"), 7, (1,)), 40)
    assert w1 != simulate_walk(g, WalkState(N("a"), 7, (2,)), 40)


def test_sampling_matches_probabilities():
    g = network(FIG_S2)
    c = g.compiled()
    n = 100_000
    from hon.rng import uniforms

    rows = np.full(n, c.index[N("Singapore|Shanghai")])
    nxt = c.step(rows, uniforms(11, np.arange(n)))
    share = np.mean([c.nodes[i].entity == "LosAngeles" for i in nxt])
    assert abs(share - 0.7) < 3 * math.sqrt(0.7 * 0.3 / n)


def test_stationary_examples():
    pi = stationary_distribution(network({("a", "b"): 1, ("b", "a"): 1}), 0.3)
    assert pi[N("a")] == pytest.approx(0.5, abs=1e-12)
    pi = stationary_distribution(network({("n", "n"): 4}))
    assert pi[N("n")] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_stationary_three_node_oracle(seed):
    rng = np.random.default_rng(seed)
    labels = ["a", "b", "c"]
    edge_map = {(s, t): float(rng.integers(1, 9)) for s in labels for t in labels if rng.random() < 0.6}
    edge_map[("a", "b")] = 2.0
    g = network(edge_map)
    nodes, P = dense(g)
    oracle = smoothed_stationary(P, 0.01)
    pi = stationary_distribution(g, 0.01)
    assert np.allclose([pi[n] for n in nodes], oracle, atol=1e-8)


def test_entropy_examples():
    assert entropy_rate(network({("a", "b"): 1, ("b", "c"): 1, ("c", "a"): 1})) == pytest.approx(0, abs=1e-12)
    for n in (2, 3, 5):
        labels = [str(i) for i in range(n)]
        g = network({(s, t): 1 for s in labels for t in labels if s != t})
        assert entropy_rate(g) == pytest.approx(math.log2(n - 1), abs=1e-9)


def test_entropy_dense_oracle():
    g = build_first_order(round_trips(), 1)
    nodes, P = dense(g)
    pi = smoothed_stationary(P, 0.01)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, -P * np.log2(P), 0.0)
    assert entropy_rate(g) == pytest.approx(float(pi @ terms.sum(axis=1)), abs=1e-9)


def test_return_probability_cycle():
    g = network({("a", "b"): 1, ("b", "a"): 1})
    assert return_probability(g, 2, 5000, seed=1) == 1.0
    assert return_probability(g, 3, 5000, seed=1) == 0.0


def exact_return(g, steps, beta=0.01):
    nodes, P = dense(g)
    pi = smoothed_stationary(P, beta)
    Pk = np.linalg.matrix_power(P, steps)
    same = np.array([[a.entity == b.entity for b in nodes] for a in nodes])
    return float(pi @ (Pk * same).sum(axis=1))


@pytest.mark.parametrize("rep", ["first", "hon"])
def test_return_probability_matches_enumeration(rep):
    ts = round_trips()
    g = make_builder(rep, 2, 1)(ts)
    exact = exact_return(g, 2)
    n = 200_000
    est = return_probability(g, 2, n, seed=3)
    assert abs(est - exact) < 4 * math.sqrt(exact * (1 - exact) / n) + 1e-12


def test_split_holdout():
    train, tests = split_holdout(traj("a b c d e", "x y"), 3)
    assert [t.entities for t in train] == [("a", "b"), ("x", "y")]
    assert tests == [(0, ("c", "d", "e"))]


def test_alternation_accuracy():
    ts = alternation(copies=50, length=9)
    hon = evaluate_accuracy(ts, make_builder("hon", 2, 1), repeats=200, seed=0)
    assert hon.rows() == [(1, 1.0, 0.0), (2, 1.0, 0.0), (3, 1.0, 0.0)]
    first = evaluate_accuracy(ts, make_builder("first", min_support=1), repeats=200, seed=0)
    # from b the first-order walker picks a or c evenly
    assert abs(first.mean[1] - 0.5) < 3 * 0.5 / math.sqrt(100 * 200)
    assert first.mean[1] < 1.0


def test_empty_test_set():
    with pytest.raises(EmptyInput):
        evaluate_accuracy(traj("a b", "b c"), make_builder("first", min_support=1), holdout=3, repeats=2, seed=0)


def test_accuracy_threads_and_chunks_do_not_change_results():
    ts = alternation(copies=20, length=9) + round_trips(9, 1, 10)
    build = make_builder("first", min_support=1)
    a = evaluate_accuracy(ts, build, repeats=64, seed=4)
    b = evaluate_accuracy(ts, build, repeats=64, seed=4, threads=3, chunk_walkers=100)
    assert np.array_equal(a.per_repeat, b.per_repeat)
    assert a.to_csv() == b.to_csv()


def _one_step(g, train, tests):
    """Exact next-entity distribution of the walker for each test start."""
    out = []
    for i, _ in tests:
        node = locate_context(g, train[i].entities)
        dist = {}
        for m, p in transition_distribution(g, node).items():
            dist[m.entity] = dist.get(m.entity, 0.0) + p
        out.append(dist)
    return out


def test_synthetic_horizon_one_against_generator_oracle():
    cfg = GridConfig(n_walkers=20_000, seed=5)
    manifest = generate_manifest(cfg)
    ts = generate_trajectories(cfg, manifest)
    train, tests = split_holdout(ts, 3)
    rules = {r.source: r.branch for r in manifest}
    labels = cfg.labels()
    nbrs = cfg.neighbors()
    cell = {lab: i for i, lab in enumerate(labels)}

    def truth_distribution(history):
        for k in sorted({len(s) for s in rules}, reverse=True):
            if history[-k:] in rules:
                return rules[history[-k:]]
        return {labels[j]: 0.25 for j in nbrs[cell[history[-1]]]}

    q = [truth_distribution(train[i].entities) for i, _ in tests]
    reports, expected = {}, {}
    for rep in ("first", "hon"):
        build = make_builder(rep, 5, 5)
        g = build(train)
        p = _one_step(g, train, tests)
        reports[rep] = evaluate_accuracy(ts, build, repeats=100, seed=2)
        # exact expectation of the Monte Carlo estimate given the realised tails
        realised = np.mean([pt.get(tail[0], 0.0) for pt, (_, tail) in zip(p, tests)])
        sigma = reports[rep].std[1] / math.sqrt(reports[rep].repeats)
        assert abs(reports[rep].mean[1] - realised) < 4 * sigma + 1e-12
        expected[rep] = p
    # analytic gap from the generator's distributions
    diffs = [
        {x: ph.get(x, 0.0) - pf.get(x, 0.0) for x in qt}
        for ph, pf, qt in zip(expected["hon"], expected["first"], q)
    ]
    means = np.array([sum(d[x] * qx for x, qx in qt.items()) for d, qt in zip(diffs, q)])
    variances = np.array([sum(d[x] ** 2 * qx for x, qx in qt.items()) for d, qt in zip(diffs, q)]) - means**2
    gap = float(means.mean())
    # spread from the randomness of the realised held-out steps plus Monte Carlo noise
    sigma = math.sqrt(variances.sum()) / len(tests) + sum(r.std[1] / math.sqrt(r.repeats) for r in reports.values())
    measured = reports["hon"].mean[1] - reports["first"].mean[1]
    assert gap > 0 and measured > 0
    assert abs(measured - gap) < 4 * sigma
