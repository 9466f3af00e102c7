"""Exception types raised across the library.

Every error that reflects a numerical precondition carries the measured
residual so callers can log it instead of re-deriving it.
"""


class TopoinvError(Exception):
    """Base class for all library errors."""


class GapClosure(TopoinvError):
    """Spectral gap at the Fermi level closed (or nearly closed) at some k."""

    def __init__(self, k, gap, threshold):
        self.k = k
        self.gap = float(gap)
        self.threshold = float(threshold)
        super().__init__(f"gap {gap:.3e} at k={k} below threshold {threshold:.1e}")


class DimensionMismatch(TopoinvError):
    pass


class NotInvariant(TopoinvError):
    """Projector is not invariant under the time-reversal adjoint action."""

    def __init__(self, residual, tol):
        self.residual = float(residual)
        super().__init__(f"time-reversal invariance residual {residual:.3e} > {tol:.1e}")


class NotTRS(TopoinvError):
    """Family of projectors is not time-reversal symmetric."""

    def __init__(self, violation, tol):
        self.violation = float(violation)
        super().__init__(f"time-reversal symmetry violated: {violation:.3e} > {tol:.1e}")


class OddRank(TopoinvError):
    pass


class BadBaseBasis(TopoinvError):
    pass


class BadDims(TopoinvError):
    pass


class StepFailure(TopoinvError):
    """Unitarity drift in one transport step exceeded the safety bound."""

    def __init__(self, k, drift, bound):
        self.k = float(k)
        self.drift = float(drift)
        super().__init__(f"unitarity drift {drift:.3e} at k={k:.4f} exceeds {bound:.1e}; "
                         "increase the number of steps")


class BranchAmbiguity(TopoinvError):
    """An eigenvalue of the loop holonomy sits on the logarithm branch cut."""

    def __init__(self, phase):
        self.phase = float(phase)
        super().__init__(f"holonomy eigenphase {phase:.3e} just below the branch cut; "
                         "perturb the family or shift the branch")


class SymmetrizationFailure(TopoinvError):
    """The fixed-point mismatch unitary cannot be interpolated smoothly."""

    def __init__(self, phases):
        self.phases = phases
        super().__init__("mismatch unitary has an eigenvalue at -1 (log branch degeneracy); "
                         f"eigenphases: {phases}")


class NotTRSFrame(TopoinvError):
    pass


class NotAnExtension(TopoinvError):
    pass


class UnknownModel(TopoinvError):
    pass


class MissingParameter(TopoinvError):
    pass


class ParseError(TopoinvError):
    """Model file is not valid JSON; carries line/column from the decoder."""

    def __init__(self, path, line, col, msg):
        self.path = str(path)
        self.line = line
        self.col = col
        super().__init__(f"{path}:{line}:{col}: {msg}")


class SchemaError(TopoinvError):
    """Model file is valid JSON but violates the schema; names the key."""

    def __init__(self, key, msg):
        self.key = key
        super().__init__(f"{key}: {msg}")


class UnsnappedError(TopoinvError):
    """A computed invariant did not land close enough to the discrete set."""

    def __init__(self, result):
        self.result = result
        super().__init__(f"{result.kind} raw={result.raw} residual={result.residual:.3e} "
                         f"not within {result.snap_tol:.1e} of a snapped value")
