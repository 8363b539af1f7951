"""Exception hierarchy.

Every exception carries a stable ``code`` string so the command line can
report failures as machine-readable JSON.
"""

from __future__ import annotations


class LengthClustError(Exception):
    """Base class for all library errors."""

    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self), "details": self.details}


class InputError(LengthClustError, ValueError):
    code = "invalid_input"


# dissimilarity validation
class DissimilarityError(InputError):
    code = "invalid_dissimilarity"


class AsymmetryError(DissimilarityError):
    code = "asymmetric"


class NegativeEntryError(DissimilarityError):
    code = "negative_entry"


class NonzeroDiagonalError(DissimilarityError):
    code = "nonzero_diagonal"


class ZeroOffDiagonalError(DissimilarityError):
    code = "zero_off_diagonal"


class NonFiniteEntryError(DissimilarityError):
    code = "non_finite"


class DuplicateLabelError(DissimilarityError):
    code = "duplicate_label"


class ShapeError(DissimilarityError):
    code = "bad_shape"


# label subsets
class UnknownLabelError(InputError):
    code = "unknown_label"


class UnknownLeafError(UnknownLabelError):
    code = "unknown_leaf"


class EmptySubsetError(InputError):
    code = "empty_subset"


class OverlapError(InputError):
    code = "overlapping_subsets"


class SameLeafError(InputError):
    code = "same_leaf"


class NotAPartitionError(InputError):
    code = "not_a_partition"


class LeafMismatchError(InputError):
    code = "leaf_mismatch"


# trees
class TreeStructureError(InputError):
    code = "bad_tree"


class TooManyLeavesError(InputError):
    code = "too_many_leaves"


# estimators
class EmptyBlockError(InputError):
    code = "empty_block"


class MissingDepthError(InputError):
    code = "missing_depth"


class UnknownKindError(InputError):
    code = "unknown_kind"


# heights and ultrametrics
class HeightOrderError(InputError):
    code = "height_order"


class HeightValueError(InputError):
    code = "bad_height"


class MTooSmallError(InputError):
    code = "m_too_small"


class NotUltrametricError(InputError):
    code = "not_ultrametric"


class BadRangeError(InputError):
    code = "bad_range"


class ClampError(LengthClustError, RuntimeError):
    code = "clamp_failed"


class ParseError(InputError):
    code = "parse_error"

    def __init__(self, message: str, line: int | None = None, column: int | None = None, **details):
        if line is not None:
            details["line"] = line
        if column is not None:
            details["column"] = column
        super().__init__(message, **details)
        self.line = line
        self.column = column
