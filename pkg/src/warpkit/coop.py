"""Cross-platform subwarp cooperative groups.

A subwarp is a contiguous power-of-two tile of a warp. Group geometry is
computed from the local thread id alone:

    rank        = tid % size
    lane_offset = floor((tid % warp_size) / size) * size
    mask        = (all_ones >> (warp_size - size)) << lane_offset

where ``all_ones`` is the full lane mask of the configured warp width (32
or 64 bits). Collectives are expressed as request objects yielded to the
executor; ``any``/``all`` are derived from ``ballot`` by masking and
shifting the warp-wide bitfield, so warp width never leaks into callers.

Note on ``_sync`` suffixes: hardware shuffle/vote intrinsics come in plain
and ``_sync`` flavors; the rendezvous execution model already synchronizes
every collective, so a single spelling suffices here.
"""

from dataclasses import dataclass

from .config import WarpConfig, full_mask, is_power_of_two
from .errors import InvalidGroupSize, InvalidSourceRank
from .simt import Ballot, LaneContext, Shfl


def popcnt(mask: int) -> int:
    """Number of set bits in a 32- or 64-bit lane mask."""
    if mask < 0:
        raise ValueError("lane masks are unsigned")
    return int(mask).bit_count()


@dataclass(frozen=True, slots=True)
class SubwarpGroup:
    """One lane's view of its subwarp tile."""

    size: int
    rank: int
    lane_offset: int
    mask: int
    warp_size: int

    def shfl(self, value, src_rank: int) -> Shfl:
        """Request the value held by the lane of rank ``src_rank``."""
        if not 0 <= src_rank < self.size:
            raise InvalidSourceRank(f"src_rank {src_rank} outside group of size {self.size}")
        return Shfl(self, value, src_rank)

    def shfl_xor(self, value, bitmask: int) -> Shfl:
        """Request the value held by the lane of rank ``rank ^ bitmask``."""
        if not 0 <= bitmask < self.size:
            raise InvalidSourceRank(f"shfl_xor bitmask {bitmask} outside group of size {self.size}")
        return Shfl(self, value, self.rank ^ bitmask)

    def ballot(self, predicate) -> Ballot:
        """Request the bitfield of all ranks' predicates (bit i = rank i)."""
        return Ballot(self, bool(predicate), "ballot")

    def any(self, predicate) -> Ballot:
        """True iff any rank's predicate holds; evaluated via ballot."""
        return Ballot(self, bool(predicate), "any")

    def all(self, predicate) -> Ballot:
        """True iff every rank's predicate holds; evaluated via ballot."""
        return Ballot(self, bool(predicate), "all")


def tiled_partition(ctx: LaneContext, config: WarpConfig, size: int) -> SubwarpGroup:
    """Partition the calling lane's warp into contiguous tiles of ``size`` lanes."""
    if not is_power_of_two(size) or size > config.warp_size:
        raise InvalidGroupSize(
            f"subwarp size must be a power of two <= warp_size {config.warp_size}, got {size}"
        )
    ws = config.warp_size
    lane = ctx.tid % ws
    rank = ctx.tid % size
    lane_offset = (lane // size) * size
    mask = (full_mask(config) >> (ws - size)) << lane_offset
    return SubwarpGroup(size=size, rank=rank, lane_offset=lane_offset, mask=mask, warp_size=ws)
