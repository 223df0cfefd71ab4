"""Exception hierarchy shared by every module."""


class CqtSepError(Exception):
    """Base class for all library errors."""


class InvalidParameters(CqtSepError, ValueError):
    pass


class InvalidInput(CqtSepError, ValueError):
    pass


class NonInvertibleDesign(CqtSepError):
    """A filterbank whose band supports leave part of [0, fs/2] uncovered."""


class NonInvertibleFrame(CqtSepError):
    """The frame operator diagonal vanishes somewhere on the frequency grid."""


class NonInvertibleParameters(CqtSepError, ValueError):
    """STFT window/hop pair that does not satisfy overlap-add."""


class WindowTooLong(CqtSepError, ValueError):
    pass


class FormatError(CqtSepError, ValueError):
    pass


class UndefinedReference(CqtSepError, ValueError):
    pass


class InsufficientData(CqtSepError, ValueError):
    pass


class UndefinedMean(CqtSepError, ValueError):
    pass
