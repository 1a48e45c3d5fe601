"""Exception hierarchy shared by every valkit module."""


class ValkitError(Exception):
    """Base class for all valkit errors."""


class RankMismatch(ValkitError):
    """Two value-group elements come from universes of different rank."""


class PrecisionExhausted(ValkitError):
    """A truncated series ran out of known terms before a question was decided."""


class NotInValuationRing(ValkitError):
    """Residue requested for an element of negative valuation."""


class NotIndependent(ValkitError):
    """Input vectors are linearly dependent over the coefficient field.

    ``relation`` maps input index -> coefficient (a HahnSeries) of a
    vanishing combination, when one was found.
    """

    def __init__(self, message, relation=None):
        super().__init__(message)
        self.relation = relation


class UnsupportedModel(ValkitError):
    """A power-coset question the configured model cannot answer."""


class UnsupportedRefinement(ValkitError):
    """Valuation refinement needs each residue ratio to be a single variable."""


class HypothesisViolation(ValkitError):
    """A standing hypothesis of an operation failed before any check ran."""

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = list(failed)


class InternalInconsistency(ValkitError):
    """Two routes to the same quantity disagreed; indicates a bug or bad certificate."""
