"""Variable-order Markov baseline: a context tree pruned from the leaves up.

Uses the same counts, divergence and threshold as rule extraction so that the
two retained context sets can be compared like for like.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .rules import (
    ExtractionParams,
    RuleSet,
    Source,
    divergence_distributions,
    filter_counts,
    kl_divergence,
    normalize,
    significance_threshold,
)


@dataclass
class ContextTree:
    distributions: dict[Source, dict[str, float]]
    support: dict[Source, int]
    divergence_basis: dict[Source, dict[str, float]] = field(repr=False)
    children: dict[Source, list[Source]] = field(repr=False)

    def parent(self, context: Source) -> Source:
        """One-shorter suffix context; the root is the empty tuple."""
        return context[1:]

    @property
    def max_order(self) -> int:
        return max((len(c) for c in self.distributions), default=0)


def build_context_tree(counts: Mapping[Source, Mapping[str, int]], min_support: int, filtered_divergence: bool = False) -> ContextTree:
    filtered = filter_counts(counts, min_support)
    children: dict[Source, list[Source]] = {(): []}
    for c in sorted(filtered):
        children.setdefault(c[1:], []).append(c)
        children.setdefault(c, [])
    return ContextTree(
        distributions={s: normalize(t) for s, t in sorted(filtered.items())},
        support={s: sum(t.values()) for s, t in filtered.items()},
        divergence_basis=divergence_distributions(counts, filtered, filtered_divergence),
        children=children,
    )


def prune_vom(tree: ContextTree) -> set[Source]:
    """Contexts that survive pruning from the deepest order down to order 2.

    A context is dropped when it has no surviving child and its distribution
    is not significantly different from its parent's. Order-1 contexts are
    always kept.
    """
    kept: set[Source] = set()
    by_order: dict[int, list[Source]] = {}
    for c in tree.distributions:
        by_order.setdefault(len(c), []).append(c)
    for order in sorted(by_order, reverse=True):
        for c in sorted(by_order[order]):
            if order == 1 or any(ch in kept for ch in tree.children.get(c, ())):
                kept.add(c)
                continue
            parent = tree.parent(c)
            divergence = kl_divergence(tree.divergence_basis[c], tree.divergence_basis[parent])
            if divergence > significance_threshold(order, tree.support[c]):
                kept.add(c)
    return kept


@dataclass
class ComparisonReport:
    rows: list[tuple[int, int, int, int, int]]
    hon_only: set[Source]
    vom_only: set[Source]

    def totals(self) -> tuple[int, int, int, int]:
        return tuple(sum(r[i] for r in self.rows) for i in range(1, 5))

    def to_csv(self) -> str:
        lines = ["order,hon,vom,hon_only,vom_only"]
        lines += [",".join(map(str, r)) for r in self.rows]
        lines.append("total," + ",".join(map(str, self.totals())))
        return "".join(line + "\n" for line in lines)


def compare_rulesets(hon: RuleSet | set[Source], vom: set[Source]) -> ComparisonReport:
    hon_set = set(hon.rules) if isinstance(hon, RuleSet) else set(hon)
    orders = sorted({len(s) for s in hon_set | vom})
    rows = []
    for k in orders:
        h = {s for s in hon_set if len(s) == k}
        v = {s for s in vom if len(s) == k}
        rows.append((k, len(h), len(v), len(h - v), len(v - h)))
    return ComparisonReport(rows, hon_set - vom, vom - hon_set)


def vom_contexts(counts: Mapping[Source, Mapping[str, int]], params: ExtractionParams) -> set[Source]:
    limited = {s: t for s, t in counts.items() if len(s) <= params.max_order}
    return prune_vom(build_context_tree(limited, params.min_support, params.filtered_divergence))
