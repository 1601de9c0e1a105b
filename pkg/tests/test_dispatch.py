"""Executor construction, the operation registry, and instrumentation."""

import numpy as np
import pytest

from warpkit.config import WarpConfig
from warpkit.dispatch import (
    EXEC_REFERENCE,
    Executor,
    Operation,
    dispatch,
    get_operation,
    instrumentation_report,
    make_executor,
    register,
    registered_operations,
)
from warpkit.errors import NotImplementedForBackend
from warpkit.kernels import run_reduce, spmv_sellp
from warpkit.sparse import CooMatrix, coo_to_sellp

A_SELLP = coo_to_sellp(
    CooMatrix.from_entries(3, 3, [0, 0, 1, 2, 2], [0, 2, 1, 0, 2], [1.0, 2.0, 3.0, 4.0, 5.0]), 2
)
X1 = np.array([1.0, 1.0, 1.0])


class TestExecutor:
    def test_factory_kinds(self):
        assert make_executor("ref").kind == "reference"
        assert make_executor("warp32").config.warp_size == 32
        assert make_executor("warp64").config.warp_size == 64

    def test_kind_pins_warp_size(self):
        with pytest.raises(ValueError):
            Executor(kind="sim-warp32", config=WarpConfig.for_warp_size(64))
        with pytest.raises(ValueError):
            Executor(kind="reference", config=WarpConfig.for_warp_size(32))
        with pytest.raises(ValueError):
            make_executor("warp128")

    def test_custom_tuning(self):
        ex = make_executor("warp32", tuning={"block_size": 128, "subwarps_per_block": 32,
                                             "csr_subwarp_size": 4})
        assert ex.config.tuning["csr_subwarp_size"] == 4

    def test_tuning_validation(self):
        with pytest.raises(ValueError):
            WarpConfig(32, {"block_size": 100, "subwarps_per_block": 8, "csr_subwarp_size": 8})
        with pytest.raises(ValueError):
            WarpConfig(32, {"block_size": 2048, "subwarps_per_block": 8, "csr_subwarp_size": 8})
        with pytest.raises(ValueError):
            WarpConfig(32, {"block_size": 256})


class TestRegistry:
    def test_known_operations_present(self):
        names = registered_operations()
        for expected in ("spmv_coo", "spmv_csr", "spmv_sellp", "cg", "reduce_microbench"):
            assert expected in names

    def test_every_operation_has_reference_impl(self):
        for name in registered_operations():
            assert get_operation(name).impls.get(EXEC_REFERENCE) is not None

    def test_reference_impl_required(self):
        with pytest.raises(ValueError):
            Operation("broken", {"sim-warp32": lambda exec: None})

    def test_dispatch_runs_backend_impl(self, ref_exec, warp64_exec):
        y_ref = dispatch("spmv_sellp", ref_exec, A_SELLP, X1)
        y_sim = dispatch("spmv_sellp", warp64_exec, A_SELLP, X1)
        assert np.array_equal(y_ref, [3.0, 3.0, 9.0])
        assert np.array_equal(y_sim, y_ref)

    def test_missing_backend_raises(self, warp32_exec):
        op = Operation("ref_only", {EXEC_REFERENCE: lambda exec: 1.0})
        assert dispatch(op, make_executor("ref")) == 1.0
        with pytest.raises(NotImplementedForBackend):
            dispatch(op, warp32_exec)

    def test_explicit_not_implemented_marker(self, warp64_exec):
        op = Operation("marked", {EXEC_REFERENCE: lambda exec: 0, "sim-warp64": None})
        with pytest.raises(NotImplementedForBackend):
            dispatch(op, warp64_exec)

    def test_unregistered_name(self, ref_exec):
        with pytest.raises(KeyError):
            dispatch("no_such_op", ref_exec)


class TestInstrumentation:
    def test_fresh_executor_counters_zero(self):
        ex = make_executor("warp32")
        report = instrumentation_report(ex)
        assert (report.shuffles, report.ballots, report.atomics, report.lane_steps) == (0, 0, 0, 0)

    def test_reduce_size4_records_two_shuffles(self, warp32_exec):
        run_reduce(warp32_exec, 4, [1.0, 2.0, 3.0, 4.0])
        assert instrumentation_report(warp32_exec).shuffles == 2

    def test_sellp_records_zero_atomics(self, warp64_exec):
        spmv_sellp(A_SELLP, X1, warp64_exec)
        assert instrumentation_report(warp64_exec).atomics == 0
        assert instrumentation_report(warp64_exec).lane_steps > 0

    def test_dispatch_resets_between_calls(self, warp32_exec):
        dispatch("spmv_sellp", warp32_exec, A_SELLP, X1)
        first = instrumentation_report(warp32_exec).lane_steps
        dispatch("spmv_sellp", warp32_exec, A_SELLP, X1)
        assert instrumentation_report(warp32_exec).lane_steps == first

    def test_accumulation_mode(self, warp32_exec):
        dispatch("spmv_sellp", warp32_exec, A_SELLP, X1)
        first = instrumentation_report(warp32_exec).lane_steps
        warp32_exec.accumulate = True
        dispatch("spmv_sellp", warp32_exec, A_SELLP, X1)
        assert instrumentation_report(warp32_exec).lane_steps == 2 * first

    def test_snapshot_is_independent(self, warp32_exec):
        report = instrumentation_report(warp32_exec)
        report.shuffles = 999
        assert warp32_exec.counters.shuffles != 999
