"""Exception and warning types shared across the toolkit."""


class EyesegError(Exception):
    """Base class for all toolkit errors."""


class ParseError(EyesegError):
    """A record in an annotation stream could not be parsed."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateFrame(ParseError):
    pass


class NonMonotonicFrame(ParseError):
    pass


class FormatError(EyesegError):
    """A file does not conform to its on-disk format."""


class MissingFrame(EyesegError):
    """A mask archive is missing frame files announced by its manifest."""


class MissingAnnotation(EyesegError):
    """A required ground-truth feature is absent from a frame annotation."""

    def __init__(self, feature: str):
        super().__init__(f"annotation missing for feature {feature!r}")
        self.feature = feature


class NoFeasiblePoint(EyesegError):
    """No sampled ellipse boundary point satisfies the polygon constraint."""


class PromptInfeasible(EyesegError):
    """A prompt point could not be constructed for one side of the eye."""

    def __init__(self, side: str, reason: str):
        super().__init__(f"{side}: {reason}")
        self.side = side
        self.reason = reason


class DegenerateFit(EyesegError):
    """Ellipse fit input is collinear or yields a non-elliptical conic."""


class DegenerateVariance(EyesegError):
    """Paired differences have zero sample variance."""


class LengthMismatch(EyesegError):
    """Paired per-frame sequences differ in length."""


class ConsistencyError(EyesegError):
    """Inputs that must describe the same video disagree."""


class InconsistentFrameCounts(UserWarning):
    """Annotation source files cover different numbers of frames."""
