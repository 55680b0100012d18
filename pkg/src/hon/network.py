"""Wiring rules into a weighted directed graph, plus first- and fixed-order baselines.

Node labels are ``entity`` for first-order nodes and ``entity|h1,h2,...`` for
higher-order ones, with the history listed most-recent-first.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from .errors import DanglingPrefix, HONError
from .ingest import Trajectory
from .rules import ExtractionParams, RuleSet, Source, count_windows, extract_rules

Weight = int | float


class HONode(NamedTuple):
    entity: str
    history: tuple[str, ...] = ()

    @property
    def order(self) -> int:
        return 1 + len(self.history)

    @property
    def label(self) -> str:
        if not self.history:
            return self.entity
        return f"{self.entity}|{','.join(self.history)}"

    @classmethod
    def from_label(cls, label: str) -> "HONode":
        entity, sep, hist = label.partition("|")
        return cls(entity, tuple(hist.split(",")) if sep else ())

    @classmethod
    def from_path(cls, path: Sequence[str]) -> "HONode":
        """Node for a chronological path whose last element is the current entity."""
        return cls(path[-1], tuple(reversed(path[:-1])))

    @property
    def path(self) -> tuple[str, ...]:
        return tuple(reversed(self.history)) + (self.entity,)


@dataclass
class HONetwork:
    edges: dict[HONode, dict[HONode, Weight]] = field(default_factory=dict)
    extra_nodes: set[HONode] = field(default_factory=set)

    def __post_init__(self):
        self._compiled = None

    @property
    def nodes(self) -> list[HONode]:
        found = set(self.extra_nodes) | set(self.edges)
        for targets in self.edges.values():
            found.update(targets)
        return sorted(found, key=lambda n: n.label)

    @property
    def node_set(self) -> frozenset[HONode]:
        return frozenset(self.nodes)

    def projection(self, node: HONode) -> str:
        return node.entity

    def out_edges(self, node: HONode) -> dict[HONode, Weight]:
        return self.edges.get(node, {})

    @property
    def edge_count(self) -> int:
        return sum(len(t) for t in self.edges.values())

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def density(self) -> float:
        n = self.node_count
        return self.edge_count / (n * (n - 1)) if n > 1 else 0.0

    @property
    def max_order(self) -> int:
        return max((n.order for n in self.nodes), default=0)

    def total_weight(self) -> Weight:
        return sum(sum(t.values()) for t in self.edges.values())

    def in_degree(self) -> Counter:
        deg: Counter = Counter()
        for targets in self.edges.values():
            deg.update(targets.keys())
        return deg

    def edge_list(self) -> list[tuple[str, str, Weight]]:
        rows = [
            (s.label, t.label, w)
            for s, targets in self.edges.items()
            for t, w in targets.items()
        ]
        rows.sort(key=lambda r: (r[0], r[1]))
        return rows

    def compiled(self):
        # imported lazily; walk depends on this module
        if self._compiled is None:
            from .walk import CompiledNetwork

            self._compiled = CompiledNetwork.from_network(self)
        return self._compiled


def _add_edge(g: HONetwork, source: HONode, target: HONode, weight: Weight) -> None:
    g.edges.setdefault(source, {})[target] = weight


def build_network(rules: RuleSet | Mapping[Source, Mapping[str, int]]) -> HONetwork:
    """Wire a rule set into a network.

    Rules are converted in ascending order of source length; every
    higher-order source takes over the in-edge of its prefix, and at the end
    each edge is pointed at the highest-order node whose path is a suffix of
    ``source + target``. Rewiring moves endpoints only, never weights.
    """
    table = rules.rules if isinstance(rules, RuleSet) else rules
    g = HONetwork()
    ordered = sorted(table, key=lambda s: (len(s), HONode.from_path(s).label))
    for source in ordered:
        node = HONode.from_path(source)
        g.extra_nodes.add(node)
        for target in sorted(table[source]):
            _add_edge(g, node, HONode(target), table[source][target])
        if len(source) > 1:
            _rewire(g, table, source)
    _rewire_tails(g, table)
    return g


def _rewire(g: HONetwork, table, source: Source) -> None:
    prev_source, prev_target = source[:-1], source[-1]
    prev_node = HONode.from_path(prev_source)
    new_target = HONode.from_path(source)
    out = g.edges.get(prev_node, {})
    if new_target in out:
        return
    old_target = HONode(prev_target)
    if prev_source not in table or old_target not in out:
        raise DanglingPrefix(f"no edge {prev_node.label} -> {prev_target} to rewire for {new_target.label}")
    out[new_target] = out.pop(old_target)


def _rewire_tails(g: HONetwork, table) -> None:
    to_add: list[tuple[HONode, HONode, Weight]] = []
    to_remove: list[tuple[HONode, HONode]] = []
    for source in sorted(table, key=lambda s: (len(s), HONode.from_path(s).label)):
        node = HONode.from_path(source)
        for target in sorted(table[source]):
            first_order = HONode(target)
            if first_order not in g.edges.get(node, {}):
                continue
            path = source + (target,)
            while len(path) > 1:
                if path in table:
                    if len(path) == len(source) + 1:
                        # prefix rewiring already redirected this edge
                        break
                    to_add.append((node, HONode.from_path(path), g.edges[node][first_order]))
                    to_remove.append((node, first_order))
                    break
                path = path[1:]
    for source, target in to_remove:
        del g.edges[source][target]
    for source, target, weight in to_add:
        _add_edge(g, source, target, weight)


def build_first_order(ts: Iterable[Trajectory], min_support: int = 1) -> HONetwork:
    """Conventional network: edge weight is the number of observed a -> b moves."""
    g = HONetwork()
    for (a, b), c in sorted(count_windows(list(ts), 2).items()):
        if c >= min_support:
            _add_edge(g, HONode(a), HONode(b), c)
    return g


def build_fixed_order(ts: Iterable[Trajectory], k: int, min_support: int = 1) -> HONetwork:
    """Every node remembers exactly ``k - 1`` previous entities."""
    if k < 2:
        raise ValueError("fixed order must be >= 2")
    g = HONetwork()
    for window, c in sorted(count_windows(list(ts), k + 1).items()):
        if c >= min_support:
            _add_edge(g, HONode.from_path(window[:-1]), HONode.from_path(window[1:]), c)
    return g


def project_first_order(g: HONetwork) -> dict[str, dict[str, Weight]]:
    out: dict[str, dict[str, Weight]] = defaultdict(dict)
    for s, targets in g.edges.items():
        for t, w in targets.items():
            row = out[s.entity]
            row[t.entity] = row.get(t.entity, 0) + w
    return {k: dict(sorted(v.items())) for k, v in sorted(out.items())}


Builder = Callable[[Sequence[Trajectory]], HONetwork]


def make_builder(representation: str, max_order: int = 5, min_support: int = 5, k: int = 2) -> Builder:
    """Return a trajectories -> network function for ``first``, ``fixed`` or ``hon``."""
    if representation == "first":
        return lambda ts: build_first_order(ts, min_support)
    if representation == "fixed":
        return lambda ts: build_fixed_order(ts, k, min_support)
    if representation == "hon":
        params = ExtractionParams(max_order=max_order, min_support=min_support)
        return lambda ts: build_network(extract_rules(ts, params))
    raise ValueError(f"unknown representation {representation!r}")


def format_weight(w: Weight) -> str:
    if isinstance(w, int):
        return str(w)
    if float(w).is_integer():
        return str(int(w))
    return repr(float(w))


def format_edge_list(g: HONetwork) -> str:
    return "".join(f"{s},{t},{format_weight(w)}\n" for s, t, w in g.edge_list())


def write_edge_list(g: HONetwork, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_edge_list(g))


def read_edge_list(path: str | Path) -> HONetwork:
    g = HONetwork()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            head, _, raw = line.rpartition(",")
            source, target = _split_labels(head, line_no)
            try:
                weight: Weight = int(raw) if raw.lstrip("-").isdigit() else float(raw)
            except ValueError as exc:
                raise HONError(f"line {line_no}: bad weight in {line!r}") from exc
            _add_edge(g, HONode.from_label(source), HONode.from_label(target), weight)
    return g


def _split_labels(head: str, line_no: int) -> tuple[str, str]:
    # entities never contain '|' or ',', so a higher-order target starts at the
    # last token after the first one that carries '|'; otherwise the target is
    # the final token
    tokens = head.split(",")
    if len(tokens) < 2:
        raise HONError(f"line {line_no}: expected source,target,weight")
    cut = len(tokens) - 1
    for j in range(len(tokens) - 1, 0, -1):
        if "|" in tokens[j]:
            cut = j
            break
    return ",".join(tokens[:cut]), ",".join(tokens[cut:])


def format_pajek(g: HONetwork) -> str:
    nodes = g.nodes
    index = {n: i for i, n in enumerate(nodes, start=1)}
    lines = [f"*Vertices {len(nodes)}"]
    lines += [f'{i} "{n.label}"' for n, i in index.items()]
    lines.append("*Arcs")
    for s, t, w in g.edge_list():
        lines.append(f"{index[HONode.from_label(s)]} {index[HONode.from_label(t)]} {format_weight(w)}")
    return "".join(line + "\n" for line in lines)


def write_pajek(g: HONetwork, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_pajek(g))
