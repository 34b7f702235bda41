"""Exception hierarchy shared across the package."""


class GccnError(Exception):
    """Base class for all library errors."""


# -- complex construction ------------------------------------------------

class DuplicateCell(GccnError):
    pass


class RankOrderViolation(GccnError):
    pass


class SingletonRankNonzero(GccnError):
    pass


class NotABijection(GccnError):
    pass


# -- neighborhoods / hasse ------------------------------------------------

class RankFilterOutOfRange(GccnError):
    pass


class EmptySpecList(GccnError):
    pass


class UnknownSpec(GccnError):
    pass


# -- numerics --------------------------------------------------------------

class ShapeMismatch(GccnError):
    pass


class DetachedLoss(GccnError):
    pass


class NonFiniteValue(GccnError):
    pass


class ConfigMismatch(GccnError):
    pass


# -- wl ---------------------------------------------------------------------

class UncoloredNode(GccnError):
    pass


class KTooLarge(GccnError):
    pass


class OutOfRange(GccnError):
    pass


# -- data -------------------------------------------------------------------

class UnknownName(GccnError):
    pass


class MissingFile(GccnError):
    pass


class MalformedLine(GccnError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class DanglingNodeReference(GccnError):
    pass


# -- training -----------------------------------------------------------------

class DivergedLoss(GccnError):
    pass
