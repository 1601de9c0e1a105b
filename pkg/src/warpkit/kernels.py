"""Device kernels written once against the cooperative-group layer and
instantiated under the warp32/warp64 configs, plus their sequential
reference twins.

The simulated kernels never read a warp size from anywhere but the
executor's config: the same lane program serves both widths, only the
tuning table changes. The Sellp product uses neither collectives nor
atomics; the Csr product reduces one subwarp per row with a shfl_xor
butterfly; the Coo product walks contiguous nonzero segments per lane,
merges equal-row tails across the warp, and flushes row totals with
atomic adds.
"""

import math
import operator
from dataclasses import dataclass

import numpy as np

from .coop import tiled_partition
from .dispatch import Executor, dispatch, get_operation, register
from .errors import BreakdownError, DimensionMismatch, NotImplementedForBackend
from .simt import Buffer, atomic_add, launch_block, launch_grid
from .sparse import CooMatrix, CsrMatrix, SellpMatrix, dense_spmv_reference


@dataclass(frozen=True)
class ReduceStats:
    """Per-lane accounting for one subwarp reduction."""

    shuffle_ops: int
    result: float


def reduce_subwarp(group, value, op=operator.add):
    """Butterfly reduction: after log2(size) shfl_xor rounds every lane
    holds the op-fold of all lanes' values.

    Generator; drive it with ``yield from`` inside a lane program. Returns
    ``(value, ReduceStats)``.
    """
    count = 0
    bitmask = group.size >> 1
    while bitmask:
        other = yield group.shfl_xor(value, bitmask)
        value = op(value, other)
        count += 1
        bitmask >>= 1
    return value, ReduceStats(shuffle_ops=count, result=value)


def run_reduce(exec: Executor, size: int, values, op=operator.add):
    """Run one subwarp reduction on the first tile of a warp.

    Returns (per-rank results, per-lane ReduceStats list). Mainly a test
    and instrumentation surface around :func:`reduce_subwarp`.
    """
    cfg = exec.require_config()
    if len(values) != size:
        raise DimensionMismatch(f"need one value per rank, got {len(values)} for size {size}")
    vals = [float(v) for v in values]
    out = Buffer(size)
    stats = [None] * size

    def lane(ctx, inputs, outputs):
        if ctx.tid >= size:
            return
        total, st = yield from reduce_subwarp(tiled_partition(ctx, cfg, size), vals[ctx.tid], op)
        outputs[ctx.tid] = total
        stats[ctx.tid] = st

    launch_block(lane, cfg, cfg.warp_size, (), out,
                 seed=exec.seed, scramble=exec.scramble, counters=exec.counters, trace=exec.trace)
    return out.tolist(), stats


# -- data caching -----------------------------------------------------------

# Kernels index matrix data element-wise millions of times; plain lists are
# markedly faster than numpy scalar indexing, so each matrix gets a lazily
# built list view cached on the instance.
_LIST_CACHE = {}


def _lists(m, builder):
    key = id(m)
    cached = _LIST_CACHE.get(key)
    if cached is None or cached[0] is not m:
        cached = (m, builder(m))
        _LIST_CACHE[key] = cached
    return cached[1]


def _coo_lists(m):
    return _lists(m, lambda m: (m.row_idx.tolist(), m.col_idx.tolist(), m.values.tolist()))


def _csr_lists(m):
    return _lists(m, lambda m: (m.row_ptrs.tolist(), m.col_idx.tolist(), m.values.tolist()))


def _sellp_lists(m):
    return _lists(m, lambda m: (m.slice_sets.tolist(), m.col_idx.tolist(), m.values.tolist()))


def _check_spmv_dims(m, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) != m.ncols:
        raise DimensionMismatch(f"matrix is {m.nrows}x{m.ncols}, x has length {len(x)}")
    return x


# -- Sellp ------------------------------------------------------------------


def _spmv_sellp_sim(exec, m: SellpMatrix, x):
    x = _check_spmv_dims(m, x)
    cfg = exec.require_config()
    sets, cols, vals = _sellp_lists(m)
    xs = x.tolist()
    ss = m.slice_size
    block_size = max(cfg.tuning["block_size"], ss)
    slices_per_block = block_size // ss
    grid = max(1, -(-m.nslices // slices_per_block))
    nrows = m.nrows
    nslices = m.nslices
    y = Buffer(nrows)

    def lane(ctx, inputs, outputs):
        s = ctx.block_id * slices_per_block + ctx.tid // ss
        if s >= nslices:
            return
        local = ctx.tid % ss
        row = s * ss + local
        if row >= nrows:
            return
        width = sets[s + 1] - sets[s]
        k = sets[s] * ss + local
        acc = 0.0
        for _ in range(width):
            acc += vals[k] * xs[cols[k]]
            k += ss
        ctx.step(width)
        outputs[row] = acc

    atomics_before = exec.counters.atomics
    launch_grid(lane, cfg, block_size, grid, (x,), y,
                seed=exec.seed, scramble=exec.scramble, counters=exec.counters, trace=exec.trace)
    assert exec.counters.atomics == atomics_before, "sellp kernel must not issue atomics"
    return y.to_array()


def _spmv_sellp_reference(exec, m: SellpMatrix, x):
    x = _check_spmv_dims(m, x)
    y = dense_spmv_reference(m, x)
    exec.counters.lane_steps += int(m.row_lengths.sum())
    return y


# -- Csr --------------------------------------------------------------------


def _spmv_csr_sim(exec, m: CsrMatrix, x):
    x = _check_spmv_dims(m, x)
    cfg = exec.require_config()
    ptrs, cols, vals = _csr_lists(m)
    xs = x.tolist()
    sw_size = cfg.tuning["csr_subwarp_size"]
    groups = cfg.tuning["subwarps_per_block"]
    block_size = cfg.tuning["block_size"]
    if sw_size * groups > block_size:
        raise ValueError("csr_subwarp_size * subwarps_per_block exceeds block_size")
    nrows = m.nrows
    y = Buffer(nrows)

    def lane(ctx, inputs, outputs):
        group_id = ctx.tid // sw_size
        if group_id >= groups:
            return
        sw = tiled_partition(ctx, cfg, sw_size)
        for row in range(group_id, nrows, groups):
            lo = ptrs[row]
            hi = ptrs[row + 1]
            acc = 0.0
            n = 0
            for k in range(lo + sw.rank, hi, sw_size):
                acc += vals[k] * xs[cols[k]]
                n += 1
            ctx.step(n)
            total, _ = yield from reduce_subwarp(sw, acc)
            if sw.rank == 0:
                outputs[row] = total

    launch_block(lane, cfg, block_size, (x,), y,
                 seed=exec.seed, scramble=exec.scramble, counters=exec.counters, trace=exec.trace)
    return y.to_array()


def _spmv_csr_reference(exec, m: CsrMatrix, x):
    x = _check_spmv_dims(m, x)
    y = dense_spmv_reference(m, x)
    exec.counters.lane_steps += m.nnz
    return y


# -- Coo --------------------------------------------------------------------


def _spmv_coo_sim(exec, m: CooMatrix, x):
    x = _check_spmv_dims(m, x)
    cfg = exec.require_config()
    rows, cols, vals = _coo_lists(m)
    xs = x.tolist()
    block_size = cfg.tuning["block_size"]
    ws = cfg.warp_size
    nnz = m.nnz
    seg = max(1, -(-nnz // block_size))
    y = Buffer(m.nrows)

    def lane(ctx, inputs, outputs):
        warp_first = (ctx.tid - ctx.lane_id) * seg
        if warp_first >= nnz:
            return  # whole warp past the nonzeros: uniform early exit
        wg = tiled_partition(ctx, cfg, ws)
        start = ctx.tid * seg
        end = min(start + seg, nnz)
        row = -1
        acc = 0.0
        for k in range(start, end):
            r = rows[k]
            if r != row:
                if row >= 0:
                    yield atomic_add(outputs, row, acc)
                row = r
                acc = 0.0
            acc += vals[k] * xs[cols[k]]
        ctx.step(max(end - start, 0))
        # Merge the per-lane tail partials: rows are nondecreasing across
        # ranks, so equal-row tails form contiguous runs. The segmented
        # suffix sum leaves the run total on the run's first lane.
        delta = 1
        while delta < ws:
            src = wg.rank + delta
            if src >= ws:
                src = wg.rank
            nrow = yield wg.shfl(row, src)
            nval = yield wg.shfl(acc, src)
            if wg.rank + delta < ws and nrow == row:
                acc += nval
            delta <<= 1
        prev = yield wg.shfl(row, wg.rank - 1 if wg.rank else 0)
        if row >= 0 and (wg.rank == 0 or prev != row):
            yield atomic_add(outputs, row, acc)

    launch_block(lane, cfg, block_size, (x,), y,
                 seed=exec.seed, scramble=exec.scramble, counters=exec.counters, trace=exec.trace)
    return y.to_array()


def _spmv_coo_reference(exec, m: CooMatrix, x):
    x = _check_spmv_dims(m, x)
    y = dense_spmv_reference(m, x)
    exec.counters.lane_steps += m.nnz
    return y


# -- CG ---------------------------------------------------------------------


@dataclass
class CgState:
    """Mutable state of a CG run."""

    x: np.ndarray
    r: np.ndarray
    p: np.ndarray
    q: np.ndarray
    rho: float
    iteration: int
    residual_history: list


def cg_solve(m: SellpMatrix, b, tol: float, max_iters: int, exec: Executor):
    """Unpreconditioned conjugate gradients on an SPD system in Sellp form.

    Every matrix-vector product dispatches through the executor; vector
    updates and dot products run on the host. The true residual is
    recomputed every 50 iterations to bound drift. Returns
    ``(x, residual_history)`` where the history holds ||r||_2 starting at
    iteration 0.
    """
    if m.nrows != m.ncols:
        raise DimensionMismatch(f"CG needs a square matrix, got {m.nrows}x{m.ncols}")
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or len(b) != m.nrows:
        raise DimensionMismatch(f"b has length {len(b)}, matrix is {m.nrows}x{m.ncols}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    spmv = _op_impl("spmv_sellp", exec)

    b_norm = float(np.linalg.norm(b))
    state = CgState(
        x=np.zeros_like(b),
        r=b.copy(),
        p=b.copy(),
        q=np.zeros_like(b),
        rho=float(b @ b),
        iteration=0,
        residual_history=[b_norm],
    )
    if b_norm == 0.0:
        return state.x, np.asarray(state.residual_history)
    threshold = tol * b_norm
    while state.iteration < max_iters and state.residual_history[-1] > threshold:
        state.q = spmv(exec, m, state.p)
        p_ap = float(state.p @ state.q)
        if p_ap <= 0.0:
            raise BreakdownError(f"p.Ap = {p_ap} at iteration {state.iteration + 1}; system is not SPD")
        alpha = state.rho / p_ap
        state.x = state.x + alpha * state.p
        state.iteration += 1
        if state.iteration % 50 == 0:
            state.r = b - spmv(exec, m, state.x)
        else:
            state.r = state.r - alpha * state.q
        rho_next = float(state.r @ state.r)
        state.residual_history.append(math.sqrt(rho_next))
        beta = rho_next / state.rho
        state.p = state.r + beta * state.p
        state.rho = rho_next
    return state.x, np.asarray(state.residual_history)


def _cg_impl(exec, m, b, tol, max_iters):
    return cg_solve(m, b, tol, max_iters, exec)


# -- microbenchmark ---------------------------------------------------------


def reduce_microbench(exec: Executor, size: int, inner_loops: int):
    """Repeated subwarp reductions over one warp; the op-count analogue of
    timing a reduction loop with varying trip counts.

    Returns the per-lane reduction result buffer. With W = warp_size/size
    participating subwarps, the launch records inner_loops * log2(size) * W
    shuffle events.
    """
    cfg = exec.require_config()
    ws = cfg.warp_size
    out = Buffer(ws)

    def lane(ctx, inputs, outputs):
        sw = tiled_partition(ctx, cfg, size)
        v = float(sw.rank + 1)
        total = v
        for _ in range(inner_loops):
            total, _ = yield from reduce_subwarp(sw, v)
        ctx.step(inner_loops)
        outputs[ctx.tid] = total

    launch_block(lane, cfg, ws, (), out,
                 seed=exec.seed, scramble=exec.scramble, counters=exec.counters, trace=exec.trace)
    return out.to_array()


def _reduce_microbench_reference(exec, size, inner_loops):
    total = float(sum(range(1, size + 1)))
    exec.counters.lane_steps += inner_loops * size
    return np.full(size, total)


def _op_impl(name, exec):
    """Backend implementation without dispatch's counter reset; lets a
    composite operation (CG) run inner products under one accounting."""
    impl = get_operation(name).impls.get(exec.kind)
    if impl is None:
        raise NotImplementedForBackend(name, exec.kind)
    return impl


register("spmv_coo", {
    "reference": _spmv_coo_reference,
    "sim-warp32": _spmv_coo_sim,
    "sim-warp64": _spmv_coo_sim,
})
register("spmv_csr", {
    "reference": _spmv_csr_reference,
    "sim-warp32": _spmv_csr_sim,
    "sim-warp64": _spmv_csr_sim,
})
register("spmv_sellp", {
    "reference": _spmv_sellp_reference,
    "sim-warp32": _spmv_sellp_sim,
    "sim-warp64": _spmv_sellp_sim,
})
register("cg", {
    "reference": _cg_impl,
    "sim-warp32": _cg_impl,
    "sim-warp64": _cg_impl,
})
register("reduce_microbench", {
    "reference": lambda exec, size, inner_loops: _reduce_microbench_reference(exec, size, inner_loops),
    "sim-warp32": lambda exec, size, inner_loops: reduce_microbench(exec, size, inner_loops),
    "sim-warp64": lambda exec, size, inner_loops: reduce_microbench(exec, size, inner_loops),
})


def spmv_coo(m: CooMatrix, x, exec: Executor) -> np.ndarray:
    return dispatch("spmv_coo", exec, m, x)


def spmv_csr(m: CsrMatrix, x, exec: Executor) -> np.ndarray:
    return dispatch("spmv_csr", exec, m, x)


def spmv_sellp(m: SellpMatrix, x, exec: Executor) -> np.ndarray:
    return dispatch("spmv_sellp", exec, m, x)
