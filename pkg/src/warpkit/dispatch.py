"""Executor handles and the operation registry.

An :class:`Executor` names the backend an algorithm runs on: the
sequential reference, or the simulator at warp size 32 or 64. Operations
register one implementation per backend; :func:`dispatch` selects by the
executor's kind at call time and resets the executor's instrumentation
unless accumulation was requested. The registry is closed at import time;
there is no plugin loading.
"""

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .config import WarpConfig
from .errors import NotImplementedForBackend
from .simt import Instrumentation

EXEC_REFERENCE = "reference"
EXEC_WARP32 = "sim-warp32"
EXEC_WARP64 = "sim-warp64"
EXEC_KINDS = (EXEC_REFERENCE, EXEC_WARP32, EXEC_WARP64)

# CLI spellings accepted by --exec / --execs.
CLI_EXEC_NAMES = {"ref": EXEC_REFERENCE, "warp32": EXEC_WARP32, "warp64": EXEC_WARP64}

#: Explicit marker for a backend slot that intentionally has no kernel.
NOT_IMPLEMENTED = None


@dataclass
class Executor:
    """A named backend plus its instrumentation and scheduling knobs."""

    kind: str
    config: Optional[WarpConfig] = None
    counters: Instrumentation = field(default_factory=Instrumentation)
    seed: int = 42
    scramble: bool = False
    accumulate: bool = False
    trace: Optional[list] = None

    def __post_init__(self):
        if self.kind not in EXEC_KINDS:
            raise ValueError(f"unknown executor kind {self.kind!r}; expected one of {EXEC_KINDS}")
        if self.kind == EXEC_WARP32 and (self.config is None or self.config.warp_size != 32):
            raise ValueError("sim-warp32 requires a WarpConfig with warp_size 32")
        if self.kind == EXEC_WARP64 and (self.config is None or self.config.warp_size != 64):
            raise ValueError("sim-warp64 requires a WarpConfig with warp_size 64")
        if self.kind == EXEC_REFERENCE and self.config is not None:
            raise ValueError("the reference executor takes no WarpConfig")

    def require_config(self) -> WarpConfig:
        if self.config is None:
            raise ValueError(f"executor {self.kind!r} has no warp configuration")
        return self.config

    @property
    def warp_size(self) -> Optional[int]:
        return None if self.config is None else self.config.warp_size


def make_executor(name: str = "ref", *, seed: int = 42, scramble: bool = False,
                  trace: bool = False, tuning: Optional[dict] = None) -> Executor:
    """Create an executor from its CLI name (ref, warp32, warp64)."""
    kind = CLI_EXEC_NAMES.get(name, name)
    if kind not in EXEC_KINDS:
        raise ValueError(f"unknown executor {name!r}; expected one of {sorted(CLI_EXEC_NAMES)}")
    config = None
    if kind != EXEC_REFERENCE:
        ws = 32 if kind == EXEC_WARP32 else 64
        if tuning is None:
            config = WarpConfig.for_warp_size(ws)
        else:
            config = WarpConfig(warp_size=ws, tuning=tuning)
    return Executor(kind=kind, config=config, seed=seed, scramble=scramble,
                    trace=[] if trace else None)


@dataclass(frozen=True)
class Operation:
    """An algorithm name bound to per-backend implementations."""

    name: str
    impls: Mapping[str, Optional[Callable]]

    def __post_init__(self):
        unknown = set(self.impls) - set(EXEC_KINDS)
        if unknown:
            raise ValueError(f"operation {self.name!r} names unknown backends {sorted(unknown)}")
        if self.impls.get(EXEC_REFERENCE) is None:
            raise ValueError(f"operation {self.name!r} must have a reference implementation")
        object.__setattr__(self, "impls", dict(self.impls))


_REGISTRY: dict = {}


def register(name: str, impls: Mapping[str, Optional[Callable]]) -> Operation:
    op = Operation(name, impls)
    _REGISTRY[name] = op
    return op


def get_operation(name: str) -> Operation:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"no operation registered under {name!r}") from None


def registered_operations() -> tuple:
    return tuple(sorted(_REGISTRY))


def dispatch(op, exec: Executor, *args, **kwargs):
    """Run ``op`` on the executor's backend, updating its instrumentation."""
    operation = op if isinstance(op, Operation) else get_operation(op)
    impl = operation.impls.get(exec.kind, NOT_IMPLEMENTED)
    if impl is NOT_IMPLEMENTED:
        raise NotImplementedForBackend(operation.name, exec.kind)
    if not exec.accumulate:
        exec.counters.reset()
        if exec.trace is not None:
            exec.trace.clear()
    return impl(exec, *args, **kwargs)


def instrumentation_report(exec: Executor) -> Instrumentation:
    """Counter snapshot for the executor's most recent dispatch."""
    return exec.counters.snapshot()
