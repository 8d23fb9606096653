"""Certain-sample sets and the ordered pairwise query protocol.

A resolution turns one selected sample into a member of exactly one certain
set by querying the oracle against one representative per existing set, in
descending-similarity order, stopping at the first must-link.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import SimilarityMatrix
from .errors import AlreadyCertain, AlreadyInitialized, NotCertain
from .oracle import Answer, Oracle
from .spectral import ConstraintSet, Kind


@dataclass
class CertainSets:
    """Disjoint groups of samples whose pairwise relations are fully known."""

    sets: list[set[int]] = field(default_factory=list)
    membership: dict[int, int] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def resolved(self) -> set[int]:
        """The union of all certain sets (the samples with known relations)."""
        return set(self.membership)

    def init_first_sample(self, x: int) -> None:
        if self.sets:
            raise AlreadyInitialized("certain-set store already initialized")
        self.sets.append({x})
        self.membership[x] = 0

    def add_to_set(self, x: int, set_index: int) -> None:
        if x in self.membership:
            raise AlreadyCertain(f"sample {x} already resolved")
        self.sets[set_index].add(x)
        self.membership[x] = set_index

    def add_new_set(self, x: int) -> int:
        if x in self.membership:
            raise AlreadyCertain(f"sample {x} already resolved")
        self.sets.append({x})
        self.membership[x] = self.m - 1
        return self.m - 1

    def check_disjoint(self) -> bool:
        seen: set[int] = set()
        for s in self.sets:
            if s & seen:
                return False
            seen |= s
        return seen == set(self.membership)


@dataclass
class QueryRecord:
    """Audit record of one resolution: the ordered questions and the outcome."""

    sample: int
    asked: list[tuple[int, Answer]]
    outcome: tuple[str, int]   # ("joined", set_index) or ("new_set", set_index)

    @property
    def queries_used(self) -> int:
        return len(self.asked)


def representatives(
    x: int,
    certain: CertainSets,
    w: SimilarityMatrix,
) -> list[tuple[int, int, float]]:
    """One representative per certain set: the member most similar to x.

    Returned as (set index, member index, similarity), sorted by similarity
    descending; ties broken by lower set index, then lower member index.
    """
    if x in certain.membership:
        raise AlreadyCertain(f"sample {x} already resolved")
    reps = []
    for set_idx, members in enumerate(certain.sets):
        ordered = sorted(members)
        sims = [w.w[x, l] for l in ordered]
        best = int(np.argmax(sims))  # first max -> lowest member index on ties
        reps.append((set_idx, ordered[best], float(sims[best])))
    reps.sort(key=lambda r: (-r[2], r[0], r[1]))
    return reps


@dataclass
class Resolution:
    """Resumable state of one in-flight resolution.

    Interactive oracles answer asynchronously, so the protocol must survive
    being interrupted between questions; `advance` picks up where it left off.
    """

    sample: int
    reps: list[tuple[int, int, float]]
    position: int = 0
    asked: list[tuple[int, Answer]] = field(default_factory=list)

    def pending_pair(self) -> tuple[int, int]:
        return (self.sample, self.reps[self.position][1])

    def advance(self, oracle: Oracle) -> tuple[str, int | None]:
        """Query remaining representatives in order; stop at the first must-link.

        Returns ("joined", set_index) or ("new_set", None). Raises
        PendingAnswer if the oracle has no answer yet for the current pair.
        """
        while self.position < len(self.reps):
            set_idx, rep, _ = self.reps[self.position]
            answer = oracle.answer(self.sample, rep)  # may raise PendingAnswer
            self.asked.append((rep, answer))
            self.position += 1
            if answer is Answer.MUST_LINK:
                return ("joined", set_idx)
        return ("new_set", None)


def resolve_sample(
    x: int,
    certain: CertainSets,
    w: SimilarityMatrix,
    oracle: Oracle,
) -> tuple[QueryRecord, ConstraintSet]:
    """Run the full query protocol for sample x and commit the outcome.

    On a must-link answer x joins that set; if every representative answers
    cannot-link a new certain set is created. The store is only mutated once
    the resolution completes, so a failing oracle leaves state unchanged.
    """
    resolution = Resolution(sample=x, reps=representatives(x, certain, w))
    kind, set_idx = resolution.advance(oracle)
    record = commit_resolution(resolution, kind, set_idx, certain)
    return record, expand_constraints(x, certain)


def commit_resolution(
    resolution: Resolution,
    kind: str,
    set_idx: int | None,
    certain: CertainSets,
) -> QueryRecord:
    if kind == "joined":
        certain.add_to_set(resolution.sample, set_idx)
        outcome = ("joined", set_idx)
    else:
        outcome = ("new_set", certain.add_new_set(resolution.sample))
    return QueryRecord(sample=resolution.sample, asked=resolution.asked, outcome=outcome)


def expand_constraints(x: int, certain: CertainSets) -> ConstraintSet:
    """Constraints implied by a fresh resolution: must-link to x's own set,
    cannot-link to every sample in every other set (|O| - 1 in total)."""
    if x not in certain.membership:
        raise NotCertain(f"sample {x} has not been resolved")
    own = certain.membership[x]
    out = ConstraintSet()
    for set_idx, members in enumerate(certain.sets):
        kind = Kind.MUST_LINK if set_idx == own else Kind.CANNOT_LINK
        for l in sorted(members):
            if l != x:
                out.add(x, l, kind)
    return out
