"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ActiveSpectralError(Exception):
    """Base class for all package errors."""


# --- data loading ---

class ParseError(ActiveSpectralError):
    """Input file is malformed (ragged rows, non-numeric cells, empty)."""


class TooFewSamples(ActiveSpectralError):
    """Dataset has fewer than two samples."""


class InvalidParameter(ActiveSpectralError):
    """Parameter outside its legal range."""


class InvalidInput(ActiveSpectralError):
    """Input data violates a kernel precondition."""


class ShapeError(ActiveSpectralError):
    """Matrix or label-vector shapes are inconsistent."""


class AsymmetryError(ActiveSpectralError):
    """Precomputed similarity matrix exceeds the asymmetry tolerance."""


# --- spectral core ---

class NumericalError(ActiveSpectralError):
    """Eigensolver failed to converge."""


class InvalidConstraint(ActiveSpectralError):
    """Pairwise constraint references an illegal pair (e.g. i == j)."""


class InvalidPair(ActiveSpectralError):
    """Similarity-entry perturbation requested on the diagonal."""


# --- certain-set store ---

class AlreadyInitialized(ActiveSpectralError):
    """Certain-set store already holds its first sample."""


class AlreadyCertain(ActiveSpectralError):
    """Sample is already a member of a certain set."""


class NotCertain(ActiveSpectralError):
    """Sample has not been resolved into a certain set."""


class NoCertainSets(ActiveSpectralError):
    """Operation requires at least one certain set."""


class AllSamplesCertain(ActiveSpectralError):
    """No unresolved candidates remain."""


# --- oracle ---

class NoGroundTruth(ActiveSpectralError):
    """Simulated oracle requires ground-truth labels."""


class NotLogged(ActiveSpectralError):
    """Replay requested for a pair absent from the answer log."""


class OracleUnavailable(ActiveSpectralError):
    """Oracle failed mid-resolution; store state is unchanged."""


class PendingAnswer(ActiveSpectralError):
    """Interactive oracle has no answer yet for the pending pair.

    Non-fatal: the engine parks the session in AwaitingAnswer instead of
    blocking a thread.
    """

    def __init__(self, pair: tuple[int, int]):
        super().__init__(f"awaiting human answer for pair {pair}")
        self.pair = pair


# --- session persistence ---

class IncompatibleSession(ActiveSpectralError):
    """Session file is corrupt or has an unsupported version."""
