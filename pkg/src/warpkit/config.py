"""Warp-size configuration consumed by the executor and every kernel.

A :class:`WarpConfig` is the single source of hardware geometry: the warp
(or wavefront) width plus the per-backend kernel tuning table. Kernels must
never hard-code a warp size; they read it from the executor's config.
"""

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

SUPPORTED_WARP_SIZES = (32, 64)
MAX_TUNING_VALUE = 1024
REQUIRED_TUNING_KEYS = ("block_size", "subwarps_per_block", "csr_subwarp_size")

# A lane mask is a plain unsigned integer with one bit per lane; only the
# low warp_size bits may ever be set.
LaneMask = int


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class WarpConfig:
    """Hardware geometry and kernel tuning for one simulated backend."""

    warp_size: int
    tuning: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.warp_size not in SUPPORTED_WARP_SIZES:
            raise ValueError(f"warp_size must be one of {SUPPORTED_WARP_SIZES}, got {self.warp_size}")
        tuning = dict(self.tuning)
        for key in REQUIRED_TUNING_KEYS:
            if key not in tuning:
                raise ValueError(f"tuning table is missing {key!r}")
        for key, value in tuning.items():
            if not isinstance(value, int) or not is_power_of_two(value) or value > MAX_TUNING_VALUE:
                raise ValueError(
                    f"tuning[{key!r}] must be a positive power of two <= {MAX_TUNING_VALUE}, got {value!r}"
                )
        if tuning["block_size"] % self.warp_size != 0:
            raise ValueError("tuning['block_size'] must be a multiple of warp_size")
        object.__setattr__(self, "tuning", MappingProxyType(tuning))

    @property
    def lane_mask_width(self) -> int:
        return self.warp_size

    @classmethod
    def for_warp_size(cls, warp_size: int) -> "WarpConfig":
        """Default tuning tables for the two supported widths."""
        if warp_size == 32:
            tuning = {"block_size": 256, "subwarps_per_block": 32, "csr_subwarp_size": 8}
        elif warp_size == 64:
            tuning = {"block_size": 256, "subwarps_per_block": 16, "csr_subwarp_size": 16}
        else:
            raise ValueError(f"warp_size must be one of {SUPPORTED_WARP_SIZES}, got {warp_size}")
        return cls(warp_size=warp_size, tuning=tuning)


def full_mask(config: WarpConfig) -> LaneMask:
    """All-ones lane mask: the low warp_size bits set."""
    return (1 << config.warp_size) - 1


def validate_lane_mask(mask: LaneMask, config: WarpConfig) -> LaneMask:
    if mask < 0 or mask >> config.warp_size:
        raise ValueError(f"lane mask {mask:#x} sets bits above warp_size={config.warp_size}")
    return mask
