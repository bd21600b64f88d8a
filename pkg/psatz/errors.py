"""
Exception types raised by the library
"""


class PsatzError(ValueError):
    """Base class for invalid inputs"""


class AlgebraMismatch(PsatzError):
    pass


class SizeMismatch(PsatzError):
    pass


class DimensionMismatch(PsatzError):
    pass


class DegreeOverflow(PsatzError):
    pass


class UnsupportedCombination(PsatzError):
    pass


class MalformedProblem(PsatzError):
    """SDP data that fails validation before iteration"""


class ProblemFormatError(PsatzError):
    """A problem, certificate or witness file that cannot be decoded"""

    def __init__(self, message: str, record: str = ''):
        self.record = record
        super().__init__(f"{record}: {message}" if record else message)
