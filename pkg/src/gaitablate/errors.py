"""Exception types raised across the toolkit."""


class GaitError(Exception):
    """Base class for all toolkit errors."""


# ingestion / preprocessing
class MissingMetadata(GaitError):
    pass


class MalformedFrame(GaitError):
    def __init__(self, path, row, message=""):
        self.path = path
        self.row = row
        super().__init__(f"{path}: row {row}: {message}" if message else f"{path}: row {row}")


class UnknownMarker(GaitError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown marker {name!r}")


class DuplicateSubject(GaitError):
    pass


class NoStrideFound(GaitError):
    pass


class IncompleteStride(GaitError):
    pass


class RateMismatch(GaitError):
    pass


class TooFewFrames(GaitError):
    pass


# perturbation
class WindowTooLarge(GaitError):
    pass


class UnknownPart(GaitError):
    pass


class DegenerateData(GaitError):
    pass


class InvalidComposition(GaitError):
    def __init__(self, message, step_index=None):
        self.step_index = step_index
        if step_index is not None:
            message = f"step {step_index}: {message}"
        super().__init__(message)


class ScopeMismatch(GaitError):
    pass


class InvalidSpec(GaitError):
    """Unparseable or out-of-range perturbation step."""


# features
class IncompleteReductionMap(GaitError):
    pass


# learning
class EmptyMatrix(GaitError):
    pass


class SingleClass(GaitError):
    pass


class NonPositiveHyperparameter(GaitError):
    pass


class LengthMismatch(GaitError):
    pass


class CapReachedWarning(UserWarning):
    """SMO stopped at its iteration cap before reaching KKT tolerance."""


# experiment
class TooFewSamples(GaitError):
    pass


class SingleSexSide(GaitError):
    pass


class InvalidParams(GaitError):
    pass


Empty = EmptyMatrix
