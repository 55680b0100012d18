"""PageRank on any network, with node scores summed per entity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, UniverseMismatch
from .network import HONetwork, HONode
from .walk import power_iteration


@dataclass
class RankVector:
    node_scores: dict[HONode, float]
    entity_scores: dict[str, float]
    damping: float
    teleport: str

    def to_csv(self) -> str:
        lines = ["entity,score,rank"]
        for r, (e, s) in enumerate(ranked(self.entity_scores), start=1):
            lines.append(f"{e},{s!r},{r}")
        return "".join(line + "\n" for line in lines)


def ranked(scores: dict[str, float]) -> list[tuple[str, float]]:
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


def pagerank(
    g: HONetwork,
    damping: float = 0.85,
    tol: float = 1e-12,
    max_iter: int = 200,
    teleport: str = "node",
) -> RankVector:
    """Power-iteration PageRank; dangling mass is spread like teleportation.

    ``teleport="node"`` jumps uniformly over network nodes. ``"entity"``
    jumps uniformly over entities and splits each entity's share evenly
    among its nodes.
    """
    c = g.compiled()
    n = len(c)
    if n == 0:
        raise EmptyInput("network has no nodes")
    if teleport == "node":
        u = np.full(n, 1.0 / n)
    elif teleport == "entity":
        per_entity = np.bincount(c.entity_of, minlength=len(c.entities))
        u = 1.0 / (len(c.entities) * per_entity[c.entity_of])
    else:
        raise ValueError(f"unknown teleport mode {teleport!r}")
    r = power_iteration(c, damping, u, tol, max_iter)
    node_scores = dict(zip(c.nodes, r.tolist()))
    rv = RankVector(node_scores, {}, damping, teleport)
    rv.entity_scores = aggregate_scores(rv, g)
    return rv


def aggregate_scores(rv: RankVector, g: HONetwork | None = None) -> dict[str, float]:
    out: dict[str, float] = {}
    for node, s in rv.node_scores.items():
        out[node.entity] = out.get(node.entity, 0.0) + s
    return dict(sorted(out.items()))


def rank_delta(base: dict[str, float], other: dict[str, float]) -> list[tuple[str, float, float, float, float]]:
    """Per entity: (entity, base score, other score, delta, relative rank change).

    Relative rank change is ``(rank_base - rank_other) / rank_base`` with rank
    1 the highest score, so a positive value is a move up the ranking.
    """
    if set(base) != set(other):
        raise UniverseMismatch(
            f"{len(set(base) ^ set(other))} entities appear in only one of the score sets"
        )
    rank_base = {e: i for i, (e, _) in enumerate(ranked(base), start=1)}
    rank_other = {e: i for i, (e, _) in enumerate(ranked(other), start=1)}
    rows = [
        (e, base[e], other[e], other[e] - base[e], (rank_base[e] - rank_other[e]) / rank_base[e])
        for e in base
    ]
    rows.sort(key=lambda r: (-abs(r[3]), r[0]))
    return rows


def format_delta(rows) -> str:
    lines = ["entity,score_base,score_other,delta,rel_rank_change"]
    lines += [f"{e},{b!r},{o!r},{d!r},{r!r}" for e, b, o, d, r in rows]
    return "".join(line + "\n" for line in lines)
