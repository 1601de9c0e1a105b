"""warpkit: a GPU portability workbench.

Simulates warp/wavefront-level execution at widths 32 and 64 to validate
platform-portable subwarp cooperative groups and the sparse kernels built
on them, translates CUDA-dialect sources to HIP, and cross-validates all
backends with a benchmark harness.
"""

from .config import LaneMask, WarpConfig, full_mask
from .coop import SubwarpGroup, popcnt, tiled_partition
from .dispatch import (
    Executor,
    Instrumentation,
    Operation,
    dispatch,
    instrumentation_report,
    make_executor,
    register,
)
from .kernels import ReduceStats, cg_solve, reduce_subwarp, spmv_coo, spmv_csr, spmv_sellp
from .simt import (
    AtomicAdd,
    AtomicEvent,
    Ballot,
    Buffer,
    LaneContext,
    Shfl,
    atomic_add,
    atomic_add_complex,
    launch_block,
    launch_grid,
)
from .sparse import (
    CooMatrix,
    CsrMatrix,
    SellpMatrix,
    coo_to_csr,
    coo_to_sellp,
    dense_spmv_reference,
    read_matrix_market,
    write_matrix_market,
)

__version__ = "0.1.0"

__all__ = [
    "AtomicAdd",
    "AtomicEvent",
    "Ballot",
    "Buffer",
    "CooMatrix",
    "CsrMatrix",
    "Executor",
    "Instrumentation",
    "LaneContext",
    "LaneMask",
    "Operation",
    "ReduceStats",
    "SellpMatrix",
    "Shfl",
    "SubwarpGroup",
    "WarpConfig",
    "atomic_add",
    "atomic_add_complex",
    "cg_solve",
    "coo_to_csr",
    "coo_to_sellp",
    "dense_spmv_reference",
    "dispatch",
    "full_mask",
    "instrumentation_report",
    "launch_block",
    "launch_grid",
    "make_executor",
    "popcnt",
    "read_matrix_market",
    "reduce_subwarp",
    "register",
    "spmv_coo",
    "spmv_csr",
    "spmv_sellp",
    "tiled_partition",
    "write_matrix_market",
]
