"""Exception hierarchy shared by all solvers."""


class WeylSchaError(Exception):
    """Base class for every error raised by the package."""


class UnstableMode(WeylSchaError):
    """A single-mode quadratic form is not bounded from below."""


class NotPositiveDefinite(WeylSchaError):
    """A matrix that must be positive definite is not.

    The offending (smallest) eigenvalue is kept in ``eigenvalue``.
    """

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class ConstraintViolated(WeylSchaError):
    """The cross block X does not satisfy the symmetry needed for reduction."""


class UnstableSpectrum(WeylSchaError):
    """A squared mode frequency vanished or became negative."""


class GapClosed(WeylSchaError):
    """The self-consistent spectrum gap closed during iteration.

    ``last_state`` holds the last stable iterate (or None), ``context``
    any parameters useful to locate the instability.
    """

    def __init__(self, message, last_state=None, context=None):
        super().__init__(message)
        self.last_state = last_state
        self.context = dict(context or {})


class NoConvergence(WeylSchaError):
    """Fixed-point iteration hit ``max_iter`` without meeting ``tol``."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class DivergentCorrelator(WeylSchaError):
    """A lattice correlator sum diverges (gapless integrand)."""


class NoStableWindow(WeylSchaError):
    """No field interval exists where the antiparallel phase is stable."""


class TruncationWarning(UserWarning):
    """Fock-space truncation is visible at the basis boundary."""
