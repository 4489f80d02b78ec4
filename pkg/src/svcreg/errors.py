"""Exception types raised across the toolkit."""

from __future__ import annotations


class SvcError(Exception):
    """Base class for all svcreg errors."""


class DegenerateInput(SvcError):
    """Point configuration too degenerate to fit a rigid motion."""


class EmptyInput(SvcError):
    """An operation received an empty point set where one is required."""


class NotUnitNorm(SvcError):
    """A direction query or indexed direction set is not unit length."""


class IndexOutOfBounds(SvcError):
    """A correspondence refers to a point index outside its cloud."""


class AllPointsDegenerate(SvcError):
    """Every point fell inside the sensor dead zone during projection."""


class EmptyHypotheses(SvcError):
    """Hypothesis evaluation was called with no candidate transforms."""


class TooFewCorrespondences(SvcError):
    """Not enough correspondences for the requested operation."""


class NoValidHypothesis(SvcError):
    """Every sampled correspondence triple was degenerate."""


class EmptyScan(SvcError):
    """Ray casting produced no surface hits."""


class NegativeSamplingFailed(SvcError):
    """Could not find a range-feasible wrong transform within the attempt budget."""


class InsufficientOverlap(SvcError):
    """The scan pair's overlap region cannot supply the requested inlier matches."""


class UnsupportedFormat(SvcError):
    """File format not recognized or not supported."""


class InvalidRotation(SvcError):
    """A loaded pose does not contain a proper rotation."""


class ParseError(SvcError):
    """Malformed input file.

    Carries the offending path plus a line number (text formats) or byte
    offset (binary formats) when known.
    """

    def __init__(self, message: str, *, path=None, line=None, offset=None):
        self.path = path
        self.line = line
        self.offset = offset
        where = ""
        if path is not None:
            where = f"{path}: "
        if line is not None:
            where += f"line {line}: "
        elif offset is not None:
            where += f"byte {offset}: "
        super().__init__(where + message)
