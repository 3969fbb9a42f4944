"""Exception hierarchy shared by every stage of the pipeline."""


class PwstabError(Exception):
    """Base class; ``code`` is the short name used in reports and CSV status columns."""

    @property
    def code(self) -> str:
        return type(self).__name__


class UnsupportedFamily(PwstabError):
    pass


class GridTooCoarse(PwstabError):
    pass


class NoOrbit(PwstabError):
    pass


class QuadratureFailure(PwstabError):
    pass


class OrbitEscape(PwstabError):
    pass


class PeriodMismatch(PwstabError):
    pass


class KappaNotPositive(PwstabError):
    pass


class DegenerateParametrization(PwstabError):
    pass


class HessianAsymmetry(PwstabError):
    pass


class BadDimension(PwstabError):
    pass


class NotApplicable(PwstabError):
    pass


class SingularC(PwstabError):
    pass


class SignatureContradiction(PwstabError):
    pass


class GridMismatch(PwstabError):
    pass


class FactorizationBreakdown(PwstabError):
    pass


class ConstantProfile(PwstabError):
    pass


class IntegrationFailure(PwstabError):
    pass


class ContourThroughZero(PwstabError):
    pass


class BlowUp(PwstabError):
    pass


class PreconditionError(PwstabError, ValueError):
    pass


class ConfigInvalid(PwstabError, ValueError):
    pass
