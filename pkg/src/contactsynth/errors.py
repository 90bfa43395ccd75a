"""Exception hierarchy shared by all pipeline stages."""


class ContactSynthError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(ContactSynthError, ValueError):
    """An argument violates its documented precondition."""


class FormatError(ContactSynthError):
    """A file does not follow its expected on-disk format."""


class TruncationError(FormatError):
    """A file ended before its header-declared payload was complete."""


class SingularityError(ParameterError):
    """The SHM normal-force bounds hit the pole at mu * tan(theta) = 1."""


class ContactLossError(ParameterError):
    """The minimum normal force is non-positive, so contact would be lost."""


class DegenerateMotionError(ParameterError):
    """A motion has zero extent or produces no excitation at all."""


class DegenerateInputError(ParameterError):
    """An input signal or mode bank carries no usable content."""


class ScenarioError(ContactSynthError):
    """A scenario file could not be parsed or validated.

    Attributes:
        key: offending key, if any.
        line: 1-based line number in the scenario file, if known.
    """

    def __init__(self, message, key=None, line=None):
        raw = message
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.key = key
        self.line = line
        self._raw = (raw, key, line)

    def __reduce__(self):
        return type(self), self._raw


class PipelineError(ContactSynthError):
    """Wraps an error raised inside a pipeline stage, recording the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause

    def __reduce__(self):
        return type(self), (self.stage, self.cause)
