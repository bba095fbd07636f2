from ..common import util


MYPY = False
if MYPY:
    from typing import Any, Dict, Optional


class TodaSpectraError(Exception):
    def __init__(self, msg, *, n=None, details=None):
        # type: (str, Optional[int], Optional[Dict[str, Any]]) -> None
        super(TodaSpectraError, self).__init__(msg)
        self.message = msg
        self.n = n
        self.details = details or {}
        if msg:
            util.debug.log_error(msg)


class NonPositiveA(TodaSpectraError):
    pass


class StepRejected(TodaSpectraError):
    pass


class BracketFailure(TodaSpectraError):
    pass


class OnSpectrumBoundary(TodaSpectraError):
    pass


class ClosedGap(TodaSpectraError):
    pass


class NoConvergence(TodaSpectraError):
    pass


class SingularPeriodMatrix(TodaSpectraError):
    pass


class RootCountMismatch(TodaSpectraError):
    pass


class NegativeArcoshArgument(TodaSpectraError):
    pass


class NewtonDivergence(TodaSpectraError):
    pass


class SingularSystem(TodaSpectraError):
    pass


class InsufficientData(TodaSpectraError):
    pass


class ConfigError(TodaSpectraError):
    def __init__(self, msg, *, key=None, line=None, column=None):
        # type: (str, Optional[str], Optional[int], Optional[int]) -> None
        self.key = key
        self.line = line
        self.column = column
        super(ConfigError, self).__init__(msg)

    def __str__(self):
        location = []
        if self.line is not None:
            location.append("line {}".format(self.line))
            if self.column is not None:
                location.append("column {}".format(self.column))
        if self.key is not None:
            location.append("key '{}'".format(self.key))
        if location:
            return "{} ({})".format(self.message, ", ".join(location))
        return self.message


class ReportWriteError(TodaSpectraError):
    def __init__(self, msg, *, path):
        # type: (str, str) -> None
        self.path = path
        super(ReportWriteError, self).__init__("{}: {}".format(path, msg))
