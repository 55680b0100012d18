from __future__ import annotations

from pathlib import Path

import pytest

from hon.corpora import canal
from hon.ingest import write_trajectories


@pytest.fixture
def canal_file(tmp_path: Path) -> Path:
    path = tmp_path / "canal.txt"
    write_trajectories(canal(), path)
    return path


def traj(*lines: str):
    from hon.ingest import Trajectory

    return [Trajectory(tuple(line.split())) for line in lines]


# acceptance results, filled in by test_acceptance and printed at the end
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[criterion]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {criterion:>2}: {verdict}  {detail}")
