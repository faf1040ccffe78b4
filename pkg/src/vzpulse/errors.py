"""Exception types shared across the package.

Three broad families matter to callers: validation problems (bad inputs,
malformed schedules), solver failures (no dilation exists, iteration caps),
and I/O problems.  The CLI maps these onto exit codes 1, 2, and 3.
"""


class VzPulseError(Exception):
    """Base class for all package errors."""


class ValidationError(VzPulseError):
    """Inputs violate a documented precondition or schema."""


class DomainError(ValidationError):
    """A sampled function was evaluated outside its time domain."""


class UnitError(ValidationError):
    """An envelope carries the wrong unit tag for its role."""


class NonHermitian(ValidationError):
    """A coupling or Hamiltonian term is not Hermitian within tolerance."""


class NotUnitary(ValidationError):
    """A matrix expected to be unitary is not, within tolerance."""


class DimensionMismatch(ValidationError):
    """Operands have incompatible dimensions."""


class DegenerateFrequencies(ValidationError):
    """Two qubit frequencies coincide where a nonzero detuning is required."""


class InconsistentLayer(ValidationError):
    """A schedule layer couples some qubit into more than one pair."""


class UnsupportedCombination(ValidationError):
    """A model/frame/flag combination that the builder does not support."""


class SolverError(VzPulseError):
    """Base class for numerical solver failures."""


class NonMonotone(SolverError):
    """A function that must be strictly monotone is not (turning point)."""


class NoSolution(SolverError):
    """The dilation equations admit no solution for the given inputs."""


class DomainExhausted(SolverError):
    """Frame phases are not defined far enough to evaluate the inverse.

    Attributes
    ----------
    required_phase : float or None
        Phase value (rad) the inverse needed but could not reach.
    suggested_extension : float or None
        Crude estimate of the extra time-domain span (s) that would cover it.
    """

    def __init__(self, msg, required_phase=None, suggested_extension=None):
        super().__init__(msg)
        self.required_phase = required_phase
        self.suggested_extension = suggested_extension


class StepTooCoarse(SolverError):
    """Propagator failed to meet tolerance within the refinement cap."""


class QuadraticNoRealRoot(SolverError):
    """The coupling-matching quadratic has no real root."""


class FixedPointStall(SolverError):
    """Chain recursion failed to connect the domain within the iteration cap."""


class SignViolation(SolverError):
    """A dilation given to the flux co-solver crosses the identity line."""


class OptimizerDiverged(SolverError):
    """Dilation optimization produced a non-finite cost."""


class NonMonotonePhase(SolverError):
    """Carrier phase passed to the I/Q codec is not strictly increasing."""


class NotEnoughPoints(SolverError):
    """Too few usable points for a requested fit."""
