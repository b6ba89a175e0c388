"""Exception hierarchy."""


class CurvlabError(Exception):
    """Base class for all library errors."""


class EvalAtAtom(CurvlabError, ValueError):
    """A singular field was evaluated exactly at an atom."""


class Divergent(CurvlabError, ArithmeticError):
    """An integral is infinite for the given parameters."""


class NonzeroTotalMass(CurvlabError, ValueError):
    pass


class NoDensityRepresentable(CurvlabError, ValueError):
    pass


class AtomOnCircle(CurvlabError, ValueError):
    pass


class AnnulusOutOfDomain(CurvlabError, ValueError):
    pass


class SegmentOutOfDomain(CurvlabError, ValueError):
    pass


class SourceOutOfDomain(CurvlabError, ValueError):
    pass


class CurveTooShort(CurvlabError, ValueError):
    pass


class NotBorderlineAtom(CurvlabError, ValueError):
    pass


class PreconditionFail(CurvlabError, ValueError):
    pass


class ConfigError(CurvlabError, ValueError):
    """Scenario file problem; the message names the offending key."""
