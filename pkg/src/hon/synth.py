"""Synthetic grid trajectories with injected variable-order rules.

Walkers move on a wrapped ``rows x cols`` grid, picking one of the four
neighbours uniformly unless their recent history matches an injected source,
in which case the next cell is drawn from that rule's branch distribution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InfeasibleConfig
from .ingest import Trajectory
from .rng import stream_key, uniforms
from .rules import RuleSet

SYNTH_STREAM = stream_key("synth")
BRANCH_PALETTE = ((0.6, 0.4), (0.7, 0.3), (0.8, 0.2))
DEFAULT_COUNTS = {2: 10, 3: 10, 4: 10}


@dataclass(frozen=True)
class GridConfig:
    rows: int = 10
    cols: int = 10
    n_walkers: int = 100_000
    steps_per_walker: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.rows * self.cols < 2:
            raise ValueError("grid needs at least two cells")

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def label(self, cell: int) -> str:
        return f"p{cell:0{len(str(self.n_cells - 1))}d}"

    def labels(self) -> list[str]:
        return [self.label(i) for i in range(self.n_cells)]

    def neighbors(self) -> np.ndarray:
        """(n_cells, 4) array of up/down/left/right neighbours with wrapping."""
        cells = np.arange(self.n_cells)
        r, c = divmod(cells, self.cols)
        return np.stack(
            [
                ((r - 1) % self.rows) * self.cols + c,
                ((r + 1) % self.rows) * self.cols + c,
                r * self.cols + (c - 1) % self.cols,
                r * self.cols + (c + 1) % self.cols,
            ],
            axis=1,
        )


PROFILES = {
    "ci": GridConfig(n_walkers=1_000),
    "full": GridConfig(n_walkers=100_000),
}


@dataclass(frozen=True)
class InjectedRule:
    source: tuple[str, ...]
    branch: dict[str, float] = field(hash=False)

    @property
    def order(self) -> int:
        return len(self.source)


def generate_manifest(cfg: GridConfig, counts: dict[int, int] | None = None, seed: int | None = None, max_tries: int = 10_000) -> list[InjectedRule]:
    """Sample distinct grid-path sources with two-way branches onto neighbours.

    Sources are self-avoiding grid paths; no two rules share a current cell,
    so no source is a prefix or suffix of another.
    """
    counts = DEFAULT_COUNTS if counts is None else counts
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    nbrs = cfg.neighbors()
    used_current: set[int] = set()
    sources: list[tuple[int, ...]] = []
    manifest: list[InjectedRule] = []
    for order in sorted(counts):
        if order < 2:
            raise ValueError("injected rules need order >= 2")
        for _ in range(counts[order]):
            for _attempt in range(max_tries):
                path = [int(rng.integers(cfg.n_cells))]
                while len(path) < order:
                    options = [int(x) for x in nbrs[path[-1]] if x not in path]
                    if not options:
                        break
                    path.append(options[int(rng.integers(len(options)))])
                if len(path) < order or path[-1] in used_current:
                    continue
                if any(_prefix_related(path, s) for s in sources):
                    continue
                break
            else:
                raise InfeasibleConfig(f"could not place {counts[order]} rules of order {order}")
            choices = sorted(set(int(x) for x in nbrs[path[-1]]))
            if len(choices) < 2:
                raise InfeasibleConfig("grid too small for two-way branches")
            picked = rng.choice(len(choices), size=2, replace=False)
            probs = BRANCH_PALETTE[int(rng.integers(len(BRANCH_PALETTE)))]
            branch = {cfg.label(choices[int(i)]): p for i, p in zip(picked, probs)}
            used_current.add(path[-1])
            sources.append(tuple(path))
            manifest.append(InjectedRule(tuple(cfg.label(x) for x in path), dict(sorted(branch.items()))))
    return manifest


def _prefix_related(a: Sequence[int], b: Sequence[int]) -> bool:
    n = min(len(a), len(b))
    return tuple(a[:n]) == tuple(b[:n])


def manifest_to_json(manifest: Sequence[InjectedRule]) -> str:
    return json.dumps([{"source": list(r.source), "branch": r.branch} for r in manifest], indent=2) + "\n"


def manifest_from_json(text: str) -> list[InjectedRule]:
    return [InjectedRule(tuple(r["source"]), dict(r["branch"])) for r in json.loads(text)]


def write_manifest(manifest: Sequence[InjectedRule], path: str | Path) -> None:
    Path(path).write_text(manifest_to_json(manifest), encoding="utf-8")


def read_manifest(path: str | Path) -> list[InjectedRule]:
    return manifest_from_json(Path(path).read_text(encoding="utf-8"))


def generate_cells(cfg: GridConfig, manifest: Sequence[InjectedRule]) -> np.ndarray:
    """(n_walkers, steps + 1) array of cell indices."""
    labels = cfg.labels()
    cell_of = {lab: i for i, lab in enumerate(labels)}
    n = cfg.n_cells
    nbrs = cfg.neighbors()
    by_order: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    branch_targets, branch_cum = [], []
    width = max((len(r.branch) for r in manifest), default=1)
    for k, rule in enumerate(manifest):
        targets = [cell_of[t] for t in rule.branch]
        cum = np.cumsum(list(rule.branch.values()))
        cum[-1] = 1.0
        branch_targets.append(targets + [targets[-1]] * (width - len(targets)))
        branch_cum.append(list(cum) + [1.0] * (width - len(cum)))
    for order in sorted({r.order for r in manifest}):
        idx = [k for k, r in enumerate(manifest) if r.order == order]
        codes = np.array([_path_code([cell_of[e] for e in manifest[k].source], n) for k in idx], dtype=np.int64)
        perm = np.argsort(codes)
        by_order[order] = (codes[perm], np.array(idx, dtype=np.int64)[perm])
    targets_arr = np.array(branch_targets, dtype=np.int64).reshape(len(manifest), width)
    cum_arr = np.array(branch_cum, dtype=np.float64).reshape(len(manifest), width)

    walkers = np.arange(cfg.n_walkers, dtype=np.int64)
    pos = np.empty((cfg.n_walkers, cfg.steps_per_walker + 1), dtype=np.int64)
    pos[:, 0] = np.minimum((uniforms(cfg.seed, SYNTH_STREAM, walkers, 0) * n).astype(np.int64), n - 1)
    for t in range(1, cfg.steps_per_walker + 1):
        u = uniforms(cfg.seed, SYNTH_STREAM, walkers, t)
        nxt = nbrs[pos[:, t - 1], np.minimum((u * 4).astype(np.int64), 3)]
        fired = np.full(cfg.n_walkers, -1, dtype=np.int64)
        for order in sorted(by_order, reverse=True):
            if t < order:
                continue
            codes, rule_ids = by_order[order]
            code = np.zeros(cfg.n_walkers, dtype=np.int64)
            for j in range(order):
                code = code * n + pos[:, t - order + j]
            at = np.minimum(np.searchsorted(codes, code), codes.size - 1)
            hit = (codes[at] == code) & (fired < 0)
            fired[hit] = rule_ids[at[hit]]
        rule_walkers = np.flatnonzero(fired >= 0)
        if rule_walkers.size:
            r = fired[rule_walkers]
            choice = (u[rule_walkers, None] >= cum_arr[r, :-1]).sum(axis=1) if width > 1 else np.zeros(r.size, dtype=np.int64)
            nxt[rule_walkers] = targets_arr[r, choice]
        pos[:, t] = nxt
    return pos


def _path_code(cells: Sequence[int], n: int) -> int:
    code = 0
    for c in cells:
        code = code * n + c
    return code


def generate_trajectories(cfg: GridConfig, manifest: Sequence[InjectedRule]) -> list[Trajectory]:
    labels = cfg.labels()
    pos = generate_cells(cfg, manifest)
    return [Trajectory(tuple(labels[i] for i in row)) for row in pos.tolist()]


@dataclass
class RecoveryReport:
    true_positives: dict[int, int]
    false_positives: dict[int, int]
    false_negatives: dict[int, int]
    missed: list[tuple[str, ...]]
    spurious: list[tuple[str, ...]]

    @property
    def recovered(self) -> int:
        return sum(self.true_positives.values())

    @property
    def injected(self) -> int:
        return self.recovered + sum(self.false_negatives.values())

    @property
    def exact_match(self) -> bool:
        return not self.missed and not self.spurious

    def orders(self) -> list[int]:
        return sorted(set(self.true_positives) | set(self.false_positives) | set(self.false_negatives))

    def to_dict(self) -> dict:
        return {
            "exact_match": self.exact_match,
            "recovered": self.recovered,
            "injected": self.injected,
            "per_order": [
                {
                    "order": k,
                    "true_positives": self.true_positives.get(k, 0),
                    "false_positives": self.false_positives.get(k, 0),
                    "false_negatives": self.false_negatives.get(k, 0),
                }
                for k in self.orders()
            ],
            "missed": [list(s) for s in self.missed],
            "spurious": [list(s) for s in self.spurious],
        }

    def to_csv(self) -> str:
        lines = ["order,true_positives,false_positives,false_negatives"]
        for k in self.orders():
            lines.append(f"{k},{self.true_positives.get(k, 0)},{self.false_positives.get(k, 0)},{self.false_negatives.get(k, 0)}")
        return "".join(line + "\n" for line in lines)


def validate_recovery(extracted: RuleSet, manifest: Sequence[InjectedRule]) -> RecoveryReport:
    """Compare extracted higher-order sources with the injected ones.

    An injected source counts as recovered when it is a valid source with no
    longer valid source ending in it. Any other higher-order source that is not
    a prefix of an injected source is spurious.
    """
    injected = {r.source for r in manifest}
    prefixes = {s[:k] for s in injected for k in range(1, len(s))}
    valid = extracted.valid
    tp: dict[int, int] = {}
    fn: dict[int, int] = {}
    fp: dict[int, int] = {}
    missed, spurious = [], []
    for s in sorted(injected):
        longer = any(len(v) > len(s) and v[-len(s):] == s for v in valid)
        if s in valid and not longer:
            tp[len(s)] = tp.get(len(s), 0) + 1
        else:
            fn[len(s)] = fn.get(len(s), 0) + 1
            missed.append(s)
    for s in sorted(extracted.rules):
        if len(s) > 1 and s not in injected and s not in prefixes:
            fp[len(s)] = fp.get(len(s), 0) + 1
            spurious.append(s)
    return RecoveryReport(tp, fp, fn, missed, spurious)
