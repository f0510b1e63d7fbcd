"""Exception hierarchy. The CLI maps these onto exit codes."""


class OptmechError(Exception):
    """Base class for every error raised by optmech."""


class InputError(OptmechError, ValueError):
    """Malformed or out-of-range input (settings, flags, documents)."""


class DomainError(InputError):
    """A numeric kernel was called outside its domain."""


class StructuralError(OptmechError):
    """Flows, decompositions, mechanisms and type spaces that do not fit together."""


class UnknownTypeError(StructuralError, LookupError):
    """A valuation that is not part of the agent's type space."""


class UnsupportedFlowError(StructuralError):
    """The flow cannot be decomposed into simple paths (its support has a cycle)."""


class ClassificationError(OptmechError):
    """No axis-3 region matched the parameters."""


class RegionPreconditionError(OptmechError):
    """A region-specific quantity (x or the zero-score coin) left its admissible range."""


class GuardError(OptmechError):
    """A size guard refused the computation."""


class CrosscheckMismatch(OptmechError):
    """Mechanisms that must coincide did not."""

    def __init__(self, diffs: list[str]) -> None:
        self.diffs = diffs
        super().__init__(f"{len(diffs)} mismatches: " + "; ".join(diffs[:5]))
