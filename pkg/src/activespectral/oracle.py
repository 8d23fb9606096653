"""Must-link / cannot-link answer sources: ground truth, noisy, human, replay."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NoGroundTruth, NotLogged, PendingAnswer


class Answer(Enum):
    MUST_LINK = "must"
    CANNOT_LINK = "cannot"

    def flipped(self) -> "Answer":
        return Answer.CANNOT_LINK if self is Answer.MUST_LINK else Answer.MUST_LINK


@dataclass
class LogEntry:
    i: int
    j: int
    answer: Answer
    flipped: bool = False


class Oracle:
    """Base oracle: subclasses implement `_decide`; the log is shared plumbing."""

    def __init__(self):
        self.answer_log: list[LogEntry] = []
        self._lock = threading.Lock()

    def answer(self, i: int, j: int) -> Answer:
        if i == j:
            raise ValueError("oracle queried on identical indices")
        result, flipped = self._decide(i, j)
        with self._lock:
            self.answer_log.append(LogEntry(i, j, result, flipped))
        return result

    def _decide(self, i: int, j: int) -> tuple[Answer, bool]:
        raise NotImplementedError


class GroundTruthOracle(Oracle):
    """Answers from ground-truth labels: must-link iff the labels are equal."""

    def __init__(self, labels):
        super().__init__()
        if labels is None:
            raise NoGroundTruth("ground-truth oracle requires labels")
        self.labels = np.asarray(labels)

    def _decide(self, i, j):
        same = self.labels[i] == self.labels[j]
        return (Answer.MUST_LINK if same else Answer.CANNOT_LINK), False


class NoisyOracle(GroundTruthOracle):
    """Ground truth with each answer independently flipped at a fixed rate.

    Flips are per-query: a repeated pair may flip differently. The generator
    state is exposed for session checkpointing.
    """

    def __init__(self, labels, rate: float, seed: int | None = None, rng=None):
        super().__init__(labels)
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"noise rate must be in [0, 1], got {rate}")
        self.rate = rate
        self.rng = rng if rng is not None else np.random.default_rng(seed)

    def _decide(self, i, j):
        truth, _ = super()._decide(i, j)
        if self.rate > 0 and self.rng.random() < self.rate:
            return truth.flipped(), True
        return truth, False


class InteractiveOracle(Oracle):
    """Forwards human answers handed over via `provide`.

    Never blocks: querying a pair with no provided answer raises
    PendingAnswer so the engine can park the session instead.
    """

    def __init__(self):
        super().__init__()
        self._inbox: dict[tuple[int, int], Answer] = {}

    @staticmethod
    def _key(i: int, j: int) -> tuple[int, int]:
        return (i, j) if i < j else (j, i)

    def provide(self, i: int, j: int, answer: Answer) -> None:
        with self._lock:
            self._inbox[self._key(i, j)] = answer

    def _decide(self, i, j):
        with self._lock:
            answer = self._inbox.pop(self._key(i, j), None)
        if answer is None:
            raise PendingAnswer((i, j))
        return answer, False


class ReplayOracle(Oracle):
    """Re-issues answers from a previous session's log, for deterministic replay."""

    def __init__(self, log: list[LogEntry]):
        super().__init__()
        self._answers = {self._key(e.i, e.j): e.answer for e in log}

    @staticmethod
    def _key(i: int, j: int) -> tuple[int, int]:
        return (i, j) if i < j else (j, i)

    def _decide(self, i, j):
        key = self._key(i, j)
        if key not in self._answers:
            raise NotLogged(f"pair ({i}, {j}) absent from answer log")
        return self._answers[key], False


def replay(log: list[LogEntry], i: int, j: int) -> Answer:
    """Look up the logged answer for a pair (order-insensitive)."""
    for entry in log:
        if {entry.i, entry.j} == {i, j}:
            return entry.answer
    raise NotLogged(f"pair ({i}, {j}) absent from answer log")
