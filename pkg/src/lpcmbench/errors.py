"""Exception hierarchy shared by all modules."""


class LpcmError(Exception):
    """Base class for every error raised by this package."""


class AlignmentError(LpcmError, ValueError):
    def __init__(self, message, remainder=0):
        super().__init__(message)
        self.remainder = remainder


class LayoutError(LpcmError, ValueError):
    pass


class ParseError(LpcmError, ValueError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class ColumnTypeError(LpcmError, TypeError):
    pass


class UnsupportedEncodingError(LpcmError, ValueError):
    pass


class ContainerError(LpcmError, ValueError):
    pass


class CalibrationError(LpcmError, ValueError):
    pass


class SampleRangeError(LpcmError, ValueError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class MergeError(LpcmError, ValueError):
    pass


class EmptyHistogramError(LpcmError, ValueError):
    pass


class CorpusError(LpcmError, ValueError):
    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class DecodeError(LpcmError, ValueError):
    pass


class CorruptionError(LpcmError, ValueError):
    pass


class IntegrityError(LpcmError, ValueError):
    pass


class AdapterUnavailableError(LpcmError, RuntimeError):
    pass


class SpecError(LpcmError, ValueError):
    pass


class EnumerationError(LpcmError, ValueError):
    pass


class PlanError(LpcmError, ValueError):
    pass
