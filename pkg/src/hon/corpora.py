"""Small hand-built trajectory sets with known higher-order structure."""

from __future__ import annotations

import numpy as np

from .ingest import Trajectory


def _repeat(rows: list[tuple[str, int]]) -> list[Trajectory]:
    out = []
    for line, n in rows:
        out.extend(Trajectory(tuple(line.split())) for _ in range(n))
    return out


def canal(copies: int = 5) -> list[Trajectory]:
    """Ports a..i where f and g are the two ends of a canal.

    Everything entering the canal from d leaves towards h, everything from e
    leaves towards i; a, b and c feed d and e.
    """
    return _repeat(
        [
            ("a d f g h", copies),
            ("b d f g h", copies),
            ("b e f g i", copies),
            ("c e f g i", copies),
        ]
    )


def drifting_context() -> list[Trajectory]:
    """Next step after z drifts slowly with each remembered entity.

    ``w x y z`` is followed by p 95% of the time against 50% for z alone, yet
    each single extra step of memory changes the distribution only a little.
    """
    return _repeat(
        [
            ("w x y z p", 95),
            ("w x y z q", 5),
            ("v x y z p", 55),
            ("v x y z q", 45),
            ("u y z p", 90),
            ("u y z q", 110),
            ("t z p", 160),
            ("t z q", 240),
        ]
    )


def round_trips(returns: int = 90, onward: int = 10, through: int = 100) -> list[Trajectory]:
    """Travellers from a mostly return to a via b; traffic from d passes b to c."""
    return _repeat([("a b a", returns), ("a b c", onward), ("d b c", through)])


def alternation(copies: int = 50, length: int = 8) -> list[Trajectory]:
    """a,b,a,b,... and c,b,c,b,... sequences sharing the hub b."""
    ab = " ".join("ab"[i % 2] for i in range(length))
    cb = " ".join("cb"[i % 2] for i in range(length))
    return _repeat([(ab, copies), (cb, copies)])


def photo_loop(sessions: int = 500, length: int = 30, seed: int = 0) -> list[Trajectory]:
    """Clickstreams where the two photo pages trap users who reach one from the other.

    From home a user picks view, upload, news or sports uniformly; news and
    sports lead back home. Arriving at a photo page from home, the user goes
    back home 80% of the time, but after view -> upload (or upload -> view)
    they keep alternating between the two pages with probability 0.9.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(sessions):
        path = ["home"]
        while len(path) < length:
            cur = path[-1]
            prev = path[-2] if len(path) > 1 else None
            if cur == "home":
                options, p = ["view", "upload", "news", "sports"], [0.25] * 4
            elif cur in ("news", "sports"):
                options, p = ["home"], [1.0]
            else:
                other = "upload" if cur == "view" else "view"
                options = [other, "home"]
                p = [0.9, 0.1] if prev == other else [0.2, 0.8]
            path.append(options[int(rng.choice(len(options), p=p))])
        out.append(Trajectory(tuple(path)))
    return out
