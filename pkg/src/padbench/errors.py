"""Exception hierarchy shared by all padbench modules.

Two families matter to callers: ``ValidationError`` subclasses mean the
input itself is unusable (bad file, bad arguments, broken contract), while
``ProcessingError`` subclasses mean a well-formed input could not be
processed (no consensus, failed alignment).  The CLI maps the first family
to exit code 2 and the second to exit code 3.
"""


class PadbenchError(Exception):
    """Base class for every toolkit-specific error."""

    exit_code = 2


class ValidationError(PadbenchError):
    exit_code = 2


class ProcessingError(PadbenchError):
    exit_code = 3


# imaging -------------------------------------------------------------------

class UnsupportedFormat(ValidationError):
    pass


class CorruptImage(ValidationError):
    pass


class SingularHomography(ValidationError):
    pass


class CropLargerThanSource(ValidationError):
    pass


class MarginTooLarge(ValidationError):
    pass


# features ------------------------------------------------------------------

class ImageTooSmall(ValidationError):
    pass


class KeypointTooCloseToBorder(ValidationError):
    pass


# geometry ------------------------------------------------------------------

class TooFewPairs(ValidationError):
    pass


class DegenerateConfiguration(ValidationError):
    pass


class NoConsensus(ProcessingError):
    pass


class PointAtInfinity(ValidationError):
    pass


# pipeline ------------------------------------------------------------------

class DegenerateQuad(ValidationError):
    pass


class QuadOutOfBounds(ValidationError):
    pass


class AlignmentFailed(ProcessingError):
    pass


class NoPairableSubjects(ValidationError):
    pass


# dataset -------------------------------------------------------------------

class ManifestError(ValidationError):
    pass


class UnknownSubjectInRules(ValidationError):
    pass


class RuleCoverageGap(ValidationError):
    pass


class EmptyTrainSplit(ValidationError):
    pass


class SyntheticCountMismatch(ValidationError):
    pass


class MissingSyntheticFile(ValidationError):
    pass


# metrics -------------------------------------------------------------------

class ScoreFileError(ValidationError):
    pass


class NoAttackRecords(ValidationError):
    pass


class NoBonaFideRecords(ValidationError):
    pass


class MissingClass(ValidationError):
    pass


class OutOfDomain(ValidationError):
    pass


# fid -----------------------------------------------------------------------

class TooFewSamples(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class IndefiniteMatrix(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class BadMagic(ValidationError):
    pass


class TruncatedFile(ValidationError):
    pass


class DimensionZero(ValidationError):
    pass
