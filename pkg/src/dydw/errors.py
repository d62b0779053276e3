"""Exception hierarchy.

``ValidationError`` subclasses signal bad parameters (CLI exit 2);
``DiagnosticError`` subclasses signal numerical or probabilistic
degeneracies detected during a run (CLI exit 3).
"""


class DyDWError(Exception):
    pass


class ValidationError(DyDWError, ValueError):
    pass


class ParityError(ValidationError):
    pass


class WindowError(ValidationError):
    pass


class GeometryError(ValidationError):
    pass


class HorizonError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class DiagnosticError(DyDWError, RuntimeError):
    pass


class TieError(DiagnosticError):
    """Two distinct arrows switched at exactly the same dynamical time."""


class IntegrityError(DiagnosticError):
    pass


class SolverError(DiagnosticError):
    pass


class DegenerateError(DiagnosticError):
    pass
