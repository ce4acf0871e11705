"""Exception hierarchy.

Every error carries a stable ``name`` (the class name) so the CLI can print it
on the diagnostics stream, and an ``exit_code`` group: data errors (2) cover
parsing, extraction and preprocessing; model errors (3) cover fitting and
scoring.
"""

from __future__ import annotations


class KeystressError(Exception):
    exit_code = 2

    @property
    def name(self) -> str:
        return type(self).__name__


class DataError(KeystressError):
    exit_code = 2


class ModelError(KeystressError):
    exit_code = 3


# events
class MalformedLine(DataError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class UnknownCode(DataError):
    pass


class NegativeTimestamp(DataError):
    pass


class EmptySession(DataError):
    pass


# features
class ZeroDuration(DataError):
    pass


# preprocess
class AllFeaturesDropped(DataError):
    pass


class SingleClassInput(DataError):
    pass


class EmptyClassFeature(DataError):
    pass


class UnknownFeature(DataError):
    pass


class NegativeAfterShift(DataError):
    pass


class KTooLarge(DataError):
    pass


# supervised / anomaly
class TooFewSamples(ModelError):
    pass


class NonBinaryLabels(ModelError):
    pass


class InvalidConfig(ModelError):
    pass


class EmptySplit(ModelError):
    pass


class NotEnoughNormals(ModelError):
    pass


class DegenerateData(ModelError):
    pass


class SolverNotConverged(ModelError):
    pass


class SingularCovariance(ModelError):
    pass


# metrics
class LengthMismatch(ModelError):
    pass


# synthgen
class InvalidProfile(DataError):
    pass


# cli
class MissingInput(DataError):
    pass


class ConfigInvalid(KeystressError):
    exit_code = 1


class HashMismatch(ModelError):
    pass
