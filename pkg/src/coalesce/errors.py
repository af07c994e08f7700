"""Exception types shared across the package."""

from __future__ import annotations


class CoalesceError(Exception):
    """Base class for every error raised by this package."""


class TableFormatError(CoalesceError):
    """Input table cannot be parsed into a usable schema."""


class DuplicateColumnError(TableFormatError):
    """Header contains a repeated column name."""


class MissingCellError(TableFormatError):
    """A data row has an empty or absent cell."""

    def __init__(self, message: str, row_index: int | None = None):
        super().__init__(message)
        self.row_index = row_index


class UnknownLevelError(CoalesceError):
    """A categorical value was not among the levels recorded in the schema."""


class MissingFeatureError(CoalesceError):
    """A row to encode does not supply a value for every schema feature."""


class PlanSizeError(CoalesceError):
    """Exhaustive enumeration would exceed the coalition cap."""


class FactorizationError(CoalesceError):
    """A symmetric system is not positive definite.

    ``block_index`` locates the failing block inside a stack;
    ``coalition_mask`` identifies the coalition when the failure happened
    while solving a plan.
    """

    def __init__(self, message: str, block_index: int | None = None,
                 coalition_mask: int | None = None):
        super().__init__(message)
        self.block_index = block_index
        self.coalition_mask = coalition_mask


class PlanDeficiencyError(CoalesceError):
    """The coalition normal matrix is singular; the plan cannot identify phi."""
