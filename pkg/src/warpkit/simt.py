"""Deterministic lockstep execution of one thread block of warps.

Lane programs are callables ``program(ctx, inputs, outputs)``. A program
with no collective or atomic operations may be a plain function; anything
that shuffles, ballots, or issues atomic updates must be a generator
function that ``yield``s request objects (:class:`Shfl`, :class:`Ballot`,
:class:`AtomicAdd`; the first two are normally built through
:mod:`warpkit.coop`) and receives each result when the yield resumes.

Scheduling is round-based: every runnable lane advances by one
yield-to-yield segment per round, in an order drawn once per launch from a
seeded permutation (or re-drawn every round in ``scramble`` mode). A lane
that yields a collective parks until every active lane of its subwarp has
arrived at the same call site; the collective is then evaluated and all
participants resume. Divergence at a collective is therefore a checkable
error, not undefined behavior. Atomic updates apply at the moment their
yield is reached, so their interleaving is a deterministic function of the
seed and the program.
"""

import inspect
import random
from dataclasses import dataclass
from types import GeneratorType

import numpy as np

from .config import WarpConfig
from .errors import (
    DivergentCollective,
    InactiveSourceLane,
    InvalidSourceRank,
    LaneFault,
)

_NEW, _RUNNABLE, _PARKED, _DONE = range(4)


@dataclass
class Instrumentation:
    """Collective/atomic/work counters accumulated by launches."""

    shuffles: int = 0
    ballots: int = 0
    atomics: int = 0
    lane_steps: int = 0

    def reset(self):
        self.shuffles = 0
        self.ballots = 0
        self.atomics = 0
        self.lane_steps = 0

    def snapshot(self) -> "Instrumentation":
        return Instrumentation(self.shuffles, self.ballots, self.atomics, self.lane_steps)

    def as_dict(self) -> dict:
        return {
            "shuffles": self.shuffles,
            "ballots": self.ballots,
            "atomics": self.atomics,
            "lane_steps": self.lane_steps,
        }


@dataclass(slots=True)
class LaneContext:
    """Per-lane identity inside a block; ``steps`` counts reported work items."""

    tid: int
    warp_id: int
    lane_id: int
    active: bool = True
    block_id: int = 0
    steps: int = 0

    def step(self, n: int = 1):
        self.steps += n


class Buffer:
    """Bounds-checked shared buffer; the only legal target of atomics.

    Negative indices are rejected: lanes address slots like device memory,
    not like Python sequences.
    """

    __slots__ = ("_data",)

    def __init__(self, init):
        if isinstance(init, int):
            self._data = [0.0] * init
        else:
            self._data = [x for x in np.asarray(init).tolist()]

    def _check(self, slot):
        if not isinstance(slot, (int, np.integer)):
            raise LaneFault(f"buffer slot must be an integer, got {slot!r}")
        if slot < 0 or slot >= len(self._data):
            raise LaneFault(f"buffer slot {slot} out of bounds [0, {len(self._data)})")
        return int(slot)

    def __getitem__(self, slot):
        return self._data[self._check(slot)]

    def __setitem__(self, slot, value):
        self._data[self._check(slot)] = value

    def __len__(self):
        return len(self._data)

    def to_array(self) -> np.ndarray:
        return np.asarray(self._data)

    def tolist(self) -> list:
        return list(self._data)


@dataclass(frozen=True, slots=True)
class Shfl:
    """Collective request: receive the value held by ``src_rank`` in the group."""

    group: object
    value: object
    src_rank: int


@dataclass(frozen=True, slots=True)
class Ballot:
    """Collective request: gather one predicate bit per group rank.

    ``mode`` selects the ballot-derived reduction: the raw bitfield, or the
    any/all booleans computed from it.
    """

    group: object
    predicate: bool
    mode: str = "ballot"  # "ballot" | "any" | "all"


@dataclass(frozen=True, slots=True)
class AtomicAdd:
    """Atomic request: add ``delta`` to ``buf[slot]`` and receive the prior value.

    ``part`` selects the real or imaginary component of a complex cell;
    ``None`` updates a real cell.
    """

    buf: Buffer
    slot: int
    delta: float
    part: object = None  # None | "re" | "im"


@dataclass(frozen=True, slots=True)
class AtomicEvent:
    """One applied atomic update, recorded when tracing is enabled."""

    order: int
    tid: int
    slot: int
    part: object
    delta: float
    before: float
    after: float


def atomic_add(buf: Buffer, slot: int, delta: float) -> AtomicAdd:
    """Build an atomic-add request; yield it to apply and obtain the prior value."""
    return AtomicAdd(buf, slot, float(delta), None)


def atomic_add_complex(buf: Buffer, slot: int, delta: complex):
    """Add a complex delta as two independent real atomic updates.

    The real and imaginary components are separate atomics: other lanes can
    observe the cell between the two, so no atomicity across the pair exists.
    """
    delta = complex(delta)
    yield AtomicAdd(buf, slot, delta.real, "re")
    yield AtomicAdd(buf, slot, delta.imag, "im")


class _Lane:
    __slots__ = ("ctx", "gen", "state", "pending", "park_key", "collective_seq")

    def __init__(self, ctx):
        self.ctx = ctx
        self.gen = None
        self.state = _NEW
        self.pending = None
        self.park_key = None
        self.collective_seq = 0


@dataclass(slots=True)
class _Arrival:
    tid: int
    rank: int
    site: int
    seq: int
    request: object


def _deep_line(exc) -> int:
    tb = exc.__traceback__
    line = None
    while tb is not None:
        line = tb.tb_lineno
        tb = tb.tb_next
    return line


class _BlockRun:
    """State of one block launch: lanes, rendezvous table, scheduler."""

    def __init__(self, program, config, block_size, inputs, outputs, *, seed, scramble, counters, trace, block_id):
        if block_size <= 0 or block_size % config.warp_size != 0:
            raise ValueError(f"block_size {block_size} must be a positive multiple of warp_size {config.warp_size}")
        self.program = program
        self.config = config
        self.inputs = inputs
        self.outputs = outputs
        self.counters = counters
        self.trace = trace
        self.scramble = scramble
        self.rng = random.Random(f"{seed}:{block_id}")
        ws = config.warp_size
        self.lanes = [
            _Lane(LaneContext(tid=t, warp_id=t // ws, lane_id=t % ws, block_id=block_id))
            for t in range(block_size)
        ]
        # (warp_id, group mask) -> {rank: _Arrival}
        self.pending = {}
        self.atomic_order = 0

    def run(self):
        order = list(range(len(self.lanes)))
        self.rng.shuffle(order)
        while True:
            live = [t for t in order if self.lanes[t].state in (_NEW, _RUNNABLE)]
            if not live:
                if any(l.state == _PARKED for l in self.lanes):
                    self._raise_stalled()
                return
            if self.scramble:
                self.rng.shuffle(live)
            for tid in live:
                lane = self.lanes[tid]
                if lane.state in (_NEW, _RUNNABLE):
                    self._step(lane)

    # -- lane stepping -------------------------------------------------

    def _step(self, lane):
        try:
            if lane.state == _NEW:
                lane.state = _RUNNABLE
                result = self.program(lane.ctx, self.inputs, self.outputs)
                if isinstance(result, GeneratorType):
                    lane.gen = result
                    item = next(lane.gen)
                else:
                    self._finish(lane)
                    return
            else:
                sent, lane.pending = lane.pending, None
                item = lane.gen.send(sent)
        except StopIteration:
            self._finish(lane)
            return
        except LaneFault as fault:
            raise LaneFault(
                fault.message,
                tid=lane.ctx.tid,
                site=fault.site if fault.site is not None else _deep_line(fault),
            ) from None
        except IndexError as exc:
            raise LaneFault(str(exc), tid=lane.ctx.tid, site=_deep_line(exc)) from exc
        self._handle(lane, item)

    def _handle(self, lane, item):
        if isinstance(item, AtomicAdd):
            lane.pending = self._apply_atomic(lane, item)
        elif isinstance(item, (Shfl, Ballot)):
            self._park(lane, item)
        elif item is None:
            lane.pending = None  # bare yield: a scheduling pause
        else:
            raise TypeError(f"lane {lane.ctx.tid} yielded unsupported request {item!r}")

    def _finish(self, lane):
        lane.state = _DONE
        lane.ctx.active = False
        lane.gen = None
        self.counters.lane_steps += lane.ctx.steps
        # The exit may be the last event a rendezvous in this warp waited on.
        warp = lane.ctx.warp_id
        for key in [k for k in self.pending if k[0] == warp]:
            self._try_complete(key)

    # -- atomics --------------------------------------------------------

    def _apply_atomic(self, lane, req):
        buf = req.buf
        if not isinstance(buf, Buffer):
            raise LaneFault("atomic target is not a Buffer", tid=lane.ctx.tid)
        try:
            current = buf[req.slot]
        except LaneFault as fault:
            raise LaneFault(fault.message, tid=lane.ctx.tid) from None
        if req.part == "re":
            current = complex(current)
            before = current.real
            buf[req.slot] = complex(before + req.delta, current.imag)
        elif req.part == "im":
            current = complex(current)
            before = current.imag
            buf[req.slot] = complex(current.real, before + req.delta)
        else:
            before = current
            buf[req.slot] = before + req.delta
        self.counters.atomics += 1
        if self.trace is not None:
            self.trace.append(
                AtomicEvent(self.atomic_order, lane.ctx.tid, req.slot, req.part, req.delta, before, before + req.delta)
            )
        self.atomic_order += 1
        return before

    # -- collectives ----------------------------------------------------

    def _park(self, lane, request):
        group = request.group
        if group.warp_size != self.config.warp_size:
            raise DivergentCollective(
                f"tid {lane.ctx.tid}: group warp_size {group.warp_size} does not match config {self.config.warp_size}"
            )
        site = lane.gen.gi_frame.f_lasti
        key = (lane.ctx.warp_id, group.mask)
        arrivals = self.pending.setdefault(key, {})
        arrivals[group.rank] = _Arrival(lane.ctx.tid, group.rank, site, lane.collective_seq, request)
        lane.collective_seq += 1
        lane.state = _PARKED
        lane.park_key = key
        self._try_complete(key)

    def _group_tids(self, key):
        warp_id, mask = key
        base = warp_id * self.config.warp_size
        return [base + bit for bit in range(self.config.warp_size) if mask >> bit & 1]

    def _try_complete(self, key):
        arrivals = self.pending.get(key)
        if arrivals is None:
            return
        waiting = []
        for tid in self._group_tids(key):
            lane = self.lanes[tid]
            if lane.state == _DONE:
                continue
            if lane.state == _PARKED and lane.park_key == key:
                continue
            waiting.append(tid)
        if waiting:
            return
        del self.pending[key]
        self._evaluate(key, arrivals)

    def _evaluate(self, key, arrivals):
        sites = {a.site for a in arrivals.values()}
        kinds = {(type(a.request), getattr(a.request, "mode", None)) for a in arrivals.values()}
        if len(sites) > 1 or len(kinds) > 1:
            tids = sorted(a.tid for a in arrivals.values())
            raise DivergentCollective(
                f"lanes {tids} of one subwarp reached different collective call sites (sites {sorted(sites)})"
            )
        sample = next(iter(arrivals.values())).request
        group = sample.group
        if isinstance(sample, Shfl):
            self.counters.shuffles += 1
            data = {rank: a.request.value for rank, a in arrivals.items()}
            results = {}
            for rank, arrival in arrivals.items():
                src = arrival.request.src_rank
                if not 0 <= src < group.size:
                    raise InvalidSourceRank(
                        f"tid {arrival.tid}: shuffle source rank {src} outside group of size {group.size}"
                    )
                if src not in data:
                    raise InactiveSourceLane(
                        f"tid {arrival.tid}: shuffle reads rank {src}, which exited before the collective"
                    )
                results[rank] = data[src]
        else:
            self.counters.ballots += 1
            warp_bits = 0
            base = key[0] * self.config.warp_size
            for arrival in arrivals.values():
                if arrival.request.predicate:
                    warp_bits |= 1 << (arrival.tid - base)
            group_bits = (warp_bits & group.mask) >> group.lane_offset
            if sample.mode == "any":
                value = group_bits != 0
            elif sample.mode == "all":
                value = group_bits == (1 << group.size) - 1
            else:
                value = group_bits
            results = {rank: value for rank in arrivals}
        for rank, arrival in arrivals.items():
            lane = self.lanes[arrival.tid]
            lane.pending = results[rank]
            lane.state = _RUNNABLE
            lane.park_key = None

    def _raise_stalled(self):
        notes = []
        for (warp_id, mask), arrivals in sorted(self.pending.items()):
            parked = sorted(a.tid for a in arrivals.values())
            missing = [t for t in self._group_tids((warp_id, mask)) if self.lanes[t].state != _DONE and t not in parked]
            notes.append(f"warp {warp_id} mask {mask:#x}: parked {parked}, waiting on {missing}")
        raise DivergentCollective("collective rendezvous stalled; lanes parked in mismatched groups: " + "; ".join(notes))


def _run_plain(program, config, block_size, inputs, outputs, counters, block_id):
    ws = config.warp_size
    if block_size <= 0 or block_size % ws != 0:
        raise ValueError(f"block_size {block_size} must be a positive multiple of warp_size {ws}")
    for tid in range(block_size):
        ctx = LaneContext(tid=tid, warp_id=tid // ws, lane_id=tid % ws, block_id=block_id)
        try:
            program(ctx, inputs, outputs)
        except LaneFault as fault:
            raise LaneFault(
                fault.message,
                tid=tid,
                site=fault.site if fault.site is not None else _deep_line(fault),
            ) from None
        except IndexError as exc:
            raise LaneFault(str(exc), tid=tid, site=_deep_line(exc)) from exc
        ctx.active = False
        counters.lane_steps += ctx.steps
    return outputs


def launch_block(
    program,
    config: WarpConfig,
    block_size: int,
    inputs=(),
    outputs=(),
    *,
    seed: int = 42,
    scramble: bool = False,
    counters: Instrumentation = None,
    trace=None,
    block_id: int = 0,
):
    """Run one block of ``block_size`` lanes to completion and return ``outputs``.

    Execution is bit-reproducible for a fixed seed. ``counters`` (any
    :class:`Instrumentation`) accumulates collective/atomic/work totals;
    ``trace`` may be a list collecting :class:`AtomicEvent` records.
    """
    if counters is None:
        counters = Instrumentation()
    if not inspect.isgeneratorfunction(program):
        # Collective- and atomic-free programs need no scheduler.
        return _run_plain(program, config, block_size, inputs, outputs, counters, block_id)
    run = _BlockRun(
        program, config, block_size, inputs, outputs,
        seed=seed, scramble=scramble, counters=counters, trace=trace, block_id=block_id,
    )
    run.run()
    return outputs


def launch_grid(
    program,
    config: WarpConfig,
    block_size: int,
    grid_size: int,
    inputs=(),
    outputs=(),
    *,
    seed: int = 42,
    scramble: bool = False,
    counters: Instrumentation = None,
    trace=None,
):
    """Run ``grid_size`` blocks as a loop, each with a fresh block context.

    Blocks only communicate through atomics on the shared output buffers,
    which is all the kernels here require.
    """
    for block_id in range(grid_size):
        launch_block(
            program, config, block_size, inputs, outputs,
            seed=seed, scramble=scramble, counters=counters, trace=trace, block_id=block_id,
        )
    return outputs
