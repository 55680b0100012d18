"""Random walks on a network and the fidelity metrics built on them."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyInput, NonConvergence, UnknownEntity
from .ingest import Trajectory
from .network import HONetwork, HONode
from .rng import stream_key, uniforms

EVAL_STREAM = stream_key("eval")
RETURN_STREAM = stream_key("return")


class CompiledNetwork:
    """CSR view of a network used for sampling and power iteration.

    Row ``i`` is ``nodes[i]`` (sorted by label); ``cum`` stores
    ``i + cumulative transition probability`` so a single ``searchsorted``
    samples every walker at once.
    """

    def __init__(self, nodes: list[HONode], indptr, indices, weights):
        self.nodes = nodes
        self.index = {n: i for i, n in enumerate(nodes)}
        self.entities = sorted({n.entity for n in nodes})
        entity_index = {e: i for i, e in enumerate(self.entities)}
        self.entity_of = np.array([entity_index[n.entity] for n in nodes], dtype=np.int64)
        self.max_order = max((n.order for n in nodes), default=0)
        self.indptr = indptr
        self.indices = indices
        n = len(nodes)
        rows = np.repeat(np.arange(n), np.diff(indptr))
        out_weight = np.bincount(rows, weights=weights, minlength=n)
        self.dangling = np.diff(indptr) == 0
        self.probs = weights / out_weight[rows] if weights.size else weights
        cum = np.empty_like(self.probs)
        for i in np.flatnonzero(~self.dangling):
            lo, hi = indptr[i], indptr[i + 1]
            c = np.cumsum(self.probs[lo:hi])
            c[-1] = 1.0
            cum[lo:hi] = c
        self.cum = rows + cum
        self.rows = rows

    @classmethod
    def from_network(cls, g: HONetwork) -> "CompiledNetwork":
        nodes = g.nodes
        index = {n: i for i, n in enumerate(nodes)}
        indptr = [0]
        indices: list[int] = []
        weights: list[float] = []
        for n in nodes:
            out = g.out_edges(n)
            for t in sorted(out, key=lambda m: m.label):
                indices.append(index[t])
                weights.append(float(out[t]))
            indptr.append(len(indices))
        return cls(
            nodes,
            np.array(indptr, dtype=np.int64),
            np.array(indices, dtype=np.int64),
            np.array(weights, dtype=np.float64),
        )

    def __len__(self) -> int:
        return len(self.nodes)

    def step(self, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Advance walkers at ``rows`` using draws ``u``; -1 marks a stopped walker."""
        alive = rows >= 0
        safe = np.where(alive, rows, 0)
        lo = self.indptr[safe]
        hi = self.indptr[safe + 1]
        alive &= hi > lo
        if not alive.any():
            return np.full_like(rows, -1)
        idx = np.searchsorted(self.cum, safe + u, side="right")
        idx = np.minimum(np.maximum(idx, lo), hi - 1)
        return np.where(alive, self.indices[np.clip(idx, 0, max(self.indices.size - 1, 0))], -1)

    def locate(self, history: Sequence[str]) -> int:
        for k in range(min(len(history), self.max_order), 0, -1):
            row = self.index.get(HONode.from_path(history[-k:]))
            if row is not None:
                return row
        raise UnknownEntity(f"no node for entity {history[-1]!r}" if history else "empty history")


@dataclass(frozen=True)
class WalkState:
    node: HONode
    seed: int
    stream: tuple[int, ...] = ()


@dataclass
class AccuracyReport:
    mean: dict[int, float]
    std: dict[int, float]
    repeats: int
    n_test: int
    per_repeat: np.ndarray = field(repr=False, default=None)

    def rows(self) -> list[tuple[int, float, float]]:
        return [(h, self.mean[h], self.std[h]) for h in sorted(self.mean)]

    def to_csv(self) -> str:
        lines = ["horizon,mean_accuracy,std_dev"]
        lines += [f"{h},{m!r},{s!r}" for h, m, s in self.rows()]
        return "".join(line + "\n" for line in lines)

    def to_dict(self) -> dict:
        return {
            "repeats": self.repeats,
            "n_test": self.n_test,
            "horizons": [{"horizon": h, "mean_accuracy": m, "std_dev": s} for h, m, s in self.rows()],
        }


def transition_distribution(g: HONetwork, node: HONode) -> dict[HONode, float]:
    out = g.out_edges(node)
    total = sum(out.values())
    return {m: w / total for m, w in sorted(out.items(), key=lambda kv: kv[0].label)}


def locate_context(g: HONetwork, history: Sequence[str]) -> HONode:
    """Highest-order node whose path is a suffix of ``history`` (chronological)."""
    if not history:
        raise ValueError("history must be non-empty")
    c = g.compiled()
    return c.nodes[c.locate(list(history))]


def simulate_walk(g: HONetwork, start: WalkState, steps: int) -> list[str]:
    """Walk ``steps`` steps and return the entities visited after the start."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    c = g.compiled()
    rows = np.array([c.index[start.node]], dtype=np.int64)
    path = []
    for s in range(steps):
        rows = c.step(rows, uniforms(start.seed, *start.stream, s))
        if rows[0] < 0:
            break
        path.append(c.nodes[rows[0]].entity)
    return path


def split_holdout(ts: Sequence[Trajectory], holdout: int):
    """Training trajectories plus (index, ground truth) for every testable one.

    Trajectories no longer than ``holdout`` go to training whole and are not
    tested.
    """
    train, tests = [], []
    for i, t in enumerate(ts):
        if len(t) > holdout:
            train.append(Trajectory(t.entities[:-holdout], t.id))
            tests.append((i, t.entities[-holdout:]))
        else:
            train.append(t)
    return train, tests


def _accuracy_chunk(c: CompiledNetwork, starts, truth, test_ids, reps, seed, holdout):
    # a walker that has missed once can never score again, so only walkers
    # still on track are advanced
    n_test, n_rep = starts.size, reps.size
    ok = np.repeat(starts >= 0, n_rep)
    rows = np.repeat(starts, n_rep)
    out = np.empty((holdout, n_rep))
    for s in range(holdout):
        live = np.flatnonzero(ok)
        test_of, rep_of = np.divmod(live, n_rep)
        u = uniforms(seed, EVAL_STREAM, test_ids[test_of], reps[rep_of], s)
        rows[live] = c.step(rows[live], u)
        ent = np.where(rows[live] >= 0, c.entity_of[np.maximum(rows[live], 0)], -1)
        ok[live] = ent == truth[test_of, s]
        out[s] = ok.reshape(n_test, n_rep).sum(axis=0) / n_test
    return out


def evaluate_accuracy(
    ts: Sequence[Trajectory],
    build: Callable[[Sequence[Trajectory]], HONetwork],
    holdout: int = 3,
    repeats: int = 1000,
    seed: int = 0,
    threads: int = 1,
    chunk_walkers: int = 2_000_000,
) -> AccuracyReport:
    """Hold out trajectory tails, build on the rest, and score random walks.

    A trial is correct at horizon ``h`` only when the first ``h`` simulated
    entities all match the held-out ones; walks that stop early or cannot be
    started are wrong from that point on.
    """
    train, tests = split_holdout(ts, holdout)
    if not tests:
        raise EmptyInput(f"no trajectory longer than the holdout of {holdout}")
    g = build(train)
    c = g.compiled()
    entity_index = {e: i for i, e in enumerate(c.entities)}
    starts = np.empty(len(tests), dtype=np.int64)
    truth = np.empty((len(tests), holdout), dtype=np.int64)
    for k, (i, tail) in enumerate(tests):
        try:
            starts[k] = c.locate(train[i].entities)
        except UnknownEntity:
            starts[k] = -1
        truth[k] = [entity_index.get(e, -2) for e in tail]
    test_ids = np.array([i for i, _ in tests], dtype=np.int64)

    per_chunk = max(1, chunk_walkers // len(tests))
    chunks = [np.arange(r, min(r + per_chunk, repeats), dtype=np.int64) for r in range(0, repeats, per_chunk)]

    def run(reps):
        return _accuracy_chunk(c, starts, truth, test_ids, reps, seed, holdout)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(ch) for ch in chunks]
    per_repeat = np.concatenate(parts, axis=1)
    return AccuracyReport(
        mean={h + 1: float(per_repeat[h].mean()) for h in range(holdout)},
        std={h + 1: float(per_repeat[h].std()) for h in range(holdout)},
        repeats=repeats,
        n_test=len(tests),
        per_repeat=per_repeat,
    )


def power_iteration(c: CompiledNetwork, follow: float, teleport: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Fixed point of x = follow * P^T x + (follow * dangling(x) + 1 - follow) * teleport."""
    n = len(c)
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        flow = np.bincount(c.indices, weights=x[c.rows] * c.probs, minlength=n)
        leaked = x[c.dangling].sum()
        new = follow * flow + (follow * leaked + (1.0 - follow)) * teleport
        new /= new.sum()
        change = np.abs(new - x).sum()
        x = new
        if change < tol:
            return x
    raise NonConvergence(max_iter)


def stationary_vector(g: HONetwork, beta: float = 0.01, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    c = g.compiled()
    if len(c) == 0:
        raise EmptyInput("network has no nodes")
    return power_iteration(c, 1.0 - beta, np.full(len(c), 1.0 / len(c)), tol, max_iter)


def stationary_distribution(g: HONetwork, beta: float = 0.01, tol: float = 1e-12, max_iter: int = 100_000) -> dict[HONode, float]:
    """Stationary distribution of the walk with uniform teleportation ``beta``."""
    pi = stationary_vector(g, beta, tol, max_iter)
    return dict(zip(g.compiled().nodes, pi.tolist()))


def entropy_rate(g: HONetwork, beta: float = 0.01, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Bits per step; the transition term uses the unsmoothed walk."""
    c = g.compiled()
    pi = stationary_vector(g, beta, tol, max_iter)
    p = c.probs
    terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    per_node = np.bincount(c.rows, weights=terms, minlength=len(c))
    return max(float(pi @ per_node), 0.0)


def return_probability(
    g: HONetwork,
    steps: int,
    samples: int = 100_000,
    seed: int = 0,
    beta: float = 0.01,
) -> float:
    """Fraction of stationary-start walkers back at their start entity after ``steps`` steps."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    c = g.compiled()
    pi = stationary_vector(g, beta)
    ids = np.arange(samples, dtype=np.int64)
    cdf = np.cumsum(pi)
    start = np.searchsorted(cdf, uniforms(seed, RETURN_STREAM, ids, 0) * cdf[-1], side="right")
    start = np.minimum(start, len(c) - 1)
    rows = start
    for s in range(steps):
        rows = c.step(rows, uniforms(seed, RETURN_STREAM, ids, s + 1))
    back = (rows >= 0) & (c.entity_of[np.maximum(rows, 0)] == c.entity_of[start])
    return float(back.mean())

