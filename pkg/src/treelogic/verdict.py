"""Solver verdicts shared by both satisfiability procedures."""

from __future__ import annotations

import enum
import os
import time
from dataclasses import dataclass, field
from typing import Any

from .tree_model import Tree


class Outcome(enum.Enum):
    SAT = "SAT"
    UNSAT_PROVED = "UNSAT_PROVED"
    UNSAT_WITHIN_BOUNDS = "UNSAT_WITHIN_BOUNDS"
    TIMEOUT = "TIMEOUT"

    def __str__(self) -> str:
        return self.value


class Mode(enum.Enum):
    SOUND = "sound"
    BOUNDED = "bounded"

    def __str__(self) -> str:
        return self.value


@dataclass
class Verdict:
    outcome: Outcome
    bounds: Any
    model: Tree | None = None
    stats: dict = field(default_factory=dict)

    @property
    def sat(self) -> bool:
        return self.outcome is Outcome.SAT

    def to_dict(self) -> dict:
        from .tree_model import save

        b = self.bounds
        return {
            "outcome": str(self.outcome),
            "bounds": {k: (str(v) if isinstance(v, (enum.Enum,)) else v) for k, v in vars(b).items()},
            "model": save(self.model) if self.model is not None else None,
            "stats": dict(self.stats),
        }


class Timeout(Exception):
    """Raised inside a search when its deadline passes."""


class Deadline:
    def __init__(self, seconds: float | None):
        if seconds is None:
            env = os.environ.get("TREELOGIC_TIMEOUT_SECS")
            seconds = float(env) if env else None
        self.seconds = seconds
        self.start = time.monotonic()
        self.end = None if seconds is None else self.start + seconds
        self._ticks = 0

    def check(self) -> None:
        self._ticks += 1
        if self.end is not None and (self._ticks & 63) == 0 and time.monotonic() > self.end:
            raise Timeout()

    def elapsed(self) -> float:
        return time.monotonic() - self.start
