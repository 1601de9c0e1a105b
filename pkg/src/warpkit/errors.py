"""Exception types shared across the simulator, kernels, and formats."""


class WarpkitError(Exception):
    """Base class for all warpkit errors."""


class DivergentCollective(WarpkitError):
    """Lanes of one subwarp reached different collective call sites."""


class LaneFault(WarpkitError):
    """Out-of-bounds buffer access by a lane.

    Carries the faulting thread id and call site (source line) when the
    fault is raised from inside a running block; both are ``None`` when a
    buffer is misused outside a launch.
    """

    def __init__(self, message, *, tid=None, site=None):
        self.message = message
        self.tid = tid
        self.site = site
        super().__init__(message)

    def __str__(self):
        where = []
        if self.tid is not None:
            where.append(f"tid={self.tid}")
        if self.site is not None:
            where.append(f"line={self.site}")
        prefix = f"[{', '.join(where)}] " if where else ""
        return prefix + self.message


class InvalidGroupSize(WarpkitError):
    """Subwarp size is not a power of two or exceeds the warp size."""


class InvalidSourceRank(WarpkitError):
    """Shuffle source rank falls outside the group."""


class InactiveSourceLane(WarpkitError):
    """Shuffle tried to read data from a lane that already exited."""


class DimensionMismatch(WarpkitError):
    """Operand shapes are incompatible."""


class InvalidSliceSize(WarpkitError):
    """SELL-P slice size must be a positive power of two."""


class BreakdownError(WarpkitError):
    """CG encountered p.Ap <= 0, which signals a non-SPD system."""


class NotImplementedForBackend(WarpkitError):
    """The operation has no implementation registered for this executor."""

    def __init__(self, op_name, exec_kind):
        self.op_name = op_name
        self.exec_kind = exec_kind
        super().__init__(f"operation {op_name!r} is not implemented for backend {exec_kind!r}")


class ParseError(WarpkitError):
    """Malformed MatrixMarket header or entry."""


class UnsupportedFormat(WarpkitError):
    """MatrixMarket variant outside the supported coordinate subset."""


class MissingPair(WarpkitError):
    """Ratio statistics need both executors for every (matrix, kernel) pair."""
