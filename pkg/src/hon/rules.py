"""Variable-order dependency rule extraction.

Counts every subsequence up to ``max_order + 1`` entities long, turns the
counts into next-step distributions, then grows each first-order source one
step into the past at a time, keeping a longer source only when its
distribution diverges from the last kept one by more than an order- and
support-dependent threshold.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import SupportViolation
from .ingest import Trajectory

Source = tuple[str, ...]
CountTable = dict[Source, dict[str, int]]
DistributionTable = dict[Source, dict[str, float]]


@dataclass(frozen=True)
class ExtractionParams:
    """Rule growth parameters.

    ``filtered_divergence`` compares distributions normalised from the
    min-support-filtered counts instead of the raw counts. Filtering strips
    the rare targets of thinly observed sources, which makes their
    distributions look sharper than they are and lets noise pass the
    significance test, so it is off by default.
    """

    max_order: int = 5
    min_support: int = 5
    filtered_divergence: bool = False

    def __post_init__(self):
        if self.max_order < 1:
            raise ValueError("max_order must be >= 1")
        if self.min_support < 1:
            raise ValueError("min_support must be >= 1")


@dataclass
class RuleSet:
    """Extracted rules: source path -> target -> count.

    ``valid`` holds the sources that were accepted as the highest significant
    order on some growth path; every other key is present only as a prefix of
    a valid source.
    """

    rules: dict[Source, dict[str, int]] = field(default_factory=dict)
    valid: set[Source] = field(default_factory=set)

    def __contains__(self, source: Source) -> bool:
        return source in self.rules

    def __len__(self) -> int:
        return len(self.rules)

    def __getitem__(self, source: Source) -> dict[str, int]:
        return self.rules[source]

    def sources(self, order: int | None = None) -> list[Source]:
        keys = self.rules if order is None else (s for s in self.rules if len(s) == order)
        return sorted(keys)

    def order_counts(self) -> dict[int, int]:
        counts: dict[int, int] = defaultdict(int)
        for s in self.rules:
            counts[len(s)] += 1
        return dict(sorted(counts.items()))

    def total_weight(self) -> int:
        return sum(sum(t.values()) for t in self.rules.values())

    def dump(self) -> str:
        """Debug listing, one ``h_k.….h_1.curr -> target count`` line per rule."""
        lines = []
        for s in sorted(self.rules):
            for target in sorted(self.rules[s]):
                lines.append(f"{'.'.join(s)} -> {target} {self.rules[s][target]}")
        return "".join(line + "\n" for line in lines)


def _encode(ts: Sequence[Trajectory]):
    vocab = sorted({e for t in ts for e in t.entities})
    index = {e: i for i, e in enumerate(vocab)}
    flat = np.fromiter(
        (index[e] for t in ts for e in t.entities),
        dtype=np.int64,
        count=sum(len(t) for t in ts),
    )
    lengths = np.fromiter((len(t) for t in ts), dtype=np.int64, count=len(ts))
    ends = np.repeat(np.cumsum(lengths), lengths)
    remaining = ends - np.arange(flat.size, dtype=np.int64)
    return vocab, flat, remaining


def _count_windows(flat, remaining, n_symbols: int, length: int):
    starts = np.flatnonzero(remaining >= length)
    if starts.size == 0:
        return np.empty((0, length), dtype=np.int64), np.empty(0, dtype=np.int64)
    if length * math.log2(max(n_symbols, 2)) < 62:
        codes = np.zeros(starts.size, dtype=np.int64)
        for j in range(length):
            codes = codes * n_symbols + flat[starts + j]
        uniq, counts = np.unique(codes, return_counts=True)
        windows = np.empty((uniq.size, length), dtype=np.int64)
        for j in range(length - 1, -1, -1):
            windows[:, j] = uniq % n_symbols
            uniq = uniq // n_symbols
        return windows, counts
    # alphabet too large for a packed integer key
    stacked = np.stack([flat[starts + j] for j in range(length)], axis=1)
    return np.unique(stacked, axis=0, return_counts=True)


def count_windows(ts: Sequence[Trajectory], length: int) -> dict[tuple[str, ...], int]:
    """Occurrences of every contiguous window of ``length`` entities."""
    if not ts:
        return {}
    vocab, flat, remaining = _encode(ts)
    windows, n = _count_windows(flat, remaining, len(vocab), length)
    return {tuple(vocab[i] for i in row): c for row, c in zip(windows.tolist(), n.tolist())}


def build_observations(ts: Sequence[Trajectory], max_order: int) -> CountTable:
    """Count source -> target transitions for sources of 1..max_order entities."""
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    counts: CountTable = {}
    if not ts:
        return counts
    vocab, flat, remaining = _encode(ts)
    for length in range(2, max_order + 2):
        windows, n = _count_windows(flat, remaining, len(vocab), length)
        for row, c in zip(windows.tolist(), n.tolist()):
            source = tuple(vocab[i] for i in row[:-1])
            counts.setdefault(source, {})[vocab[row[-1]]] = c
    return counts


def filter_counts(counts: Mapping[Source, Mapping[str, int]], min_support: int) -> CountTable:
    """Drop (source, target) pairs seen fewer than ``min_support`` times."""
    out: CountTable = {}
    for source, targets in counts.items():
        kept = {t: c for t, c in targets.items() if c >= min_support}
        if kept:
            out[source] = kept
    return out


def normalize(targets: Mapping[str, int]) -> dict[str, float]:
    total = sum(targets.values())
    return {t: c / total for t, c in targets.items()}


def build_distributions(counts: Mapping[Source, Mapping[str, int]], min_support: int) -> DistributionTable:
    if min_support < 1:
        raise ValueError("min_support must be >= 1")
    return {s: normalize(t) for s, t in filter_counts(counts, min_support).items()}


def kl_divergence(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    """KL(p || q) in bits. Every outcome of ``p`` must have mass under ``q``."""
    total = 0.0
    for x, px in p.items():
        if px <= 0:
            continue
        qx = q.get(x, 0.0)
        if qx <= 0:
            raise SupportViolation(f"outcome {x!r} has zero probability in the reference distribution")
        total += px * math.log2(px / qx)
    return max(total, 0.0)


def significance_threshold(order: int, support: float) -> float:
    """Divergence a source of this order and support must exceed to count."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if support <= 1:
        return math.inf
    return order / math.log2(support)


def extension_index(sources: Iterable[Source]) -> dict[Source, list[Source]]:
    """Map each source to the sources one entity longer that end with it."""
    index: dict[Source, list[Source]] = defaultdict(list)
    for s in sources:
        if len(s) > 1:
            index[s[1:]].append(s)
    for children in index.values():
        children.sort()
    return dict(index)


def divergence_distributions(
    counts: Mapping[Source, Mapping[str, int]],
    filtered: Mapping[Source, Mapping[str, int]],
    use_filtered: bool,
) -> DistributionTable:
    """Distributions fed to the significance test, one per surviving source."""
    base = filtered if use_filtered else counts
    return {s: normalize(base[s]) for s in filtered}


def extract_rules_from_counts(counts: Mapping[Source, Mapping[str, int]], params: ExtractionParams) -> RuleSet:
    filtered = filter_counts(counts, params.min_support)
    distr = divergence_distributions(counts, filtered, params.filtered_divergence)
    support = {s: sum(t.values()) for s, t in filtered.items()}
    extensions = extension_index(filtered)
    ruleset = RuleSet()

    def add_to_rules(source: Source) -> None:
        while source and source not in ruleset.rules:
            ruleset.rules[source] = dict(filtered[source])
            source = source[:-1]

    def extend_rule(valid: Source, curr: Source, order: int) -> None:
        children = extensions.get(curr, ()) if order < params.max_order else ()
        if not children:
            ruleset.valid.add(valid)
            add_to_rules(valid)
            return
        for ext in children:
            divergence = kl_divergence(distr[ext], distr[valid])
            if divergence > significance_threshold(order + 1, support[ext]):
                extend_rule(ext, ext, order + 1)
            else:
                extend_rule(valid, ext, order + 1)

    for source in sorted(s for s in distr if len(s) == 1):
        add_to_rules(source)
        extend_rule(source, source, 1)
    return ruleset


def extract_rules(ts: Sequence[Trajectory], params: ExtractionParams = ExtractionParams()) -> RuleSet:
    return extract_rules_from_counts(build_observations(ts, params.max_order), params)
