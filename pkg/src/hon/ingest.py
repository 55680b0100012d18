"""Reading, filtering and windowing trajectory files.

A trajectory file holds one trajectory per line as single-space separated
tokens, optionally led by a trajectory id.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyInput, MalformedLine

RESERVED = re.compile(r"[|,\s]")


@dataclass(frozen=True)
class Trajectory:
    entities: tuple[str, ...]
    id: str | None = None

    def __len__(self) -> int:
        return len(self.entities)


def check_entity(token: str) -> bool:
    return bool(token) and RESERVED.search(token) is None


def parse_trajectories(
    lines: Iterable[str],
    has_id: bool = False,
    dedup_consecutive: bool = False,
    max_len: int | None = None,
) -> list[Trajectory]:
    """Parse trajectory lines.

    Lines that hold no entities (blank, or an id alone) are skipped.
    ``max_len`` drops trajectories longer than the given number of entities,
    which is how crawler-like sessions are filtered out of clickstreams.
    """
    out: list[Trajectory] = []
    for line_no, line in enumerate(lines, start=1):
        tokens = line.split()
        if not tokens:
            continue
        tid = None
        if has_id:
            tid, tokens = tokens[0], tokens[1:]
            if "," in tid or "|" in tid:
                raise MalformedLine(line_no, f"reserved character in id {tid!r}")
        for tok in tokens:
            if not check_entity(tok):
                raise MalformedLine(line_no, f"reserved character in entity {tok!r}")
        if dedup_consecutive:
            tokens = [t for i, t in enumerate(tokens) if i == 0 or t != tokens[i - 1]]
        if not tokens:
            continue
        if max_len is not None and len(tokens) > max_len:
            continue
        out.append(Trajectory(tuple(tokens), tid))
    if not out:
        raise EmptyInput("no trajectories in input")
    return out


def read_trajectories(path: str | Path, **options) -> list[Trajectory]:
    # newline=None folds CRLF into LF
    with open(path, encoding="utf-8", newline=None) as fh:
        return parse_trajectories(fh, **options)


def format_trajectories(ts: Iterable[Trajectory]) -> str:
    lines = []
    for t in ts:
        tokens = list(t.entities) if t.id is None else [t.id, *t.entities]
        lines.append(" ".join(tokens))
    return "".join(line + "\n" for line in lines)


def write_trajectories(ts: Iterable[Trajectory], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_trajectories(ts))


def extract_subsequences(t: Trajectory | Sequence[str], length: int) -> list[tuple[str, ...]]:
    """All contiguous windows of ``length`` entities, in order."""
    if length < 2:
        raise ValueError("window length must be at least 2")
    seq = t.entities if isinstance(t, Trajectory) else tuple(t)
    return [seq[i : i + length] for i in range(len(seq) - length + 1)]
