"""Exception hierarchy shared by all modules."""


class RabiRingError(Exception):
    """Base class for every error raised by :mod:`rabiring`."""


class DomainError(RabiRingError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ConvergenceError(RabiRingError):
    """The minimizer did not reach the gradient tolerance.

    The best state found so far is attached as ``best``.
    """

    def __init__(self, message, best=None, energy=None, gradient_norm=None):
        super().__init__(message)
        self.best = best
        self.energy = energy
        self.gradient_norm = gradient_norm


class UnclassifiedPhaseError(RabiRingError):
    """A converged state matches none of the phase templates."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class BracketError(RabiRingError, ValueError):
    """A bisection bracket does not straddle a phase boundary."""


class PairingError(RabiRingError):
    """Eigenvalues of the Bogoliubov matrix could not be paired as +/- eps."""


class FitQualityError(RabiRingError):
    """A power-law fit fell below the quality threshold.

    ``offsets`` and ``energies`` hold the raw samples.
    """

    def __init__(self, message, offsets=None, energies=None, r_squared=None):
        super().__init__(message)
        self.offsets = offsets
        self.energies = energies
        self.r_squared = r_squared
