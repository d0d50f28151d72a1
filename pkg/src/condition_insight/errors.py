"""Exception and warning types shared across the pipeline."""

from __future__ import annotations


class ConditionInsightError(Exception):
    """Base class for all pipeline errors."""


# --- record validation ---------------------------------------------------


class RecordValidationError(ConditionInsightError):
    """A raw ingested record failed validation."""


class MissingField(RecordValidationError):
    def __init__(self, field: str):
        super().__init__(f"missing required field: {field}")
        self.field = field


class InvalidEnum(RecordValidationError):
    def __init__(self, field: str, value: object):
        super().__init__(f"invalid value for {field}: {value!r}")
        self.field = field
        self.value = value


class InconsistentDates(RecordValidationError):
    pass


class DuplicateTimestamp(RecordValidationError):
    def __init__(self, timestamp: object):
        super().__init__(f"duplicate reading timestamp: {timestamp}")
        self.timestamp = timestamp


class NonNumericValue(RecordValidationError):
    def __init__(self, value: object):
        super().__init__(f"reading value is not numeric: {value!r}")
        self.value = value


class EmptySeriesWarning(UserWarning):
    """A meter series was accepted with zero readings."""


# --- abstraction ----------------------------------------------------------


class NotEnoughData(ConditionInsightError):
    """Series too short for the requested abstraction."""

    def __init__(self, n: int, min_points: int):
        super().__init__(f"series has {n} readings, need at least {min_points}")
        self.n = n
        self.min_points = min_points


# --- transport / alignment ------------------------------------------------


class DimensionMismatch(ConditionInsightError):
    pass


class NumericalOverflow(ConditionInsightError):
    """Kernel underflowed to an all-zero row or column."""

    def __init__(self, axis: str, index: int):
        super().__init__(f"kernel underflow: {axis} {index} is all zero")
        self.axis = axis
        self.index = index


class NonPositiveMass(ConditionInsightError):
    pass


class EmptyInput(ConditionInsightError):
    pass


# --- evidence packet -------------------------------------------------------


class AssetMismatch(ConditionInsightError):
    pass


# --- agent / judge output parsing ------------------------------------------


class SchemaViolation(ConditionInsightError):
    pass


class UnknownCondition(ConditionInsightError):
    def __init__(self, raw: str):
        super().__init__(f"condition string matches no category: {raw!r}")
        self.raw = raw


class ScoreOutOfRange(ConditionInsightError):
    pass


class StatementCountMismatch(ConditionInsightError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} statement scores, got {got}")
        self.expected = expected
        self.got = got


class IndexMismatch(ConditionInsightError):
    pass


# --- gateways ---------------------------------------------------------------


class GatewayUnavailable(ConditionInsightError):
    pass


class ReplayMiss(GatewayUnavailable):
    def __init__(self, digest: str):
        super().__init__(f"no recorded response for prompt digest {digest}")
        self.digest = digest


class PersistentSchemaViolation(ConditionInsightError):
    """Every generation attempt produced unparseable output."""


# --- store / orchestration ---------------------------------------------------


class UnknownAsset(ConditionInsightError):
    def __init__(self, asset_number: str):
        super().__init__(f"asset not found in store: {asset_number}")
        self.asset_number = asset_number


class NoMatchingAssets(ConditionInsightError):
    pass


class UnreadableFile(ConditionInsightError):
    pass


class FormatError(ConditionInsightError):
    def __init__(self, path: object, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason
