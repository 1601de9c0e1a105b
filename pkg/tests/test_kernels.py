"""Kernel semantics against the sequential oracle, plus the reduction
op-count law and CG behavior."""

import math
import operator

import numpy as np
import pytest

from warpkit.bench import max_scaled_rel_err
from warpkit.corpus import diagonal_matrix, poisson2d_matrix, random_sparse_matrix, tridiagonal_matrix
from warpkit.dispatch import make_executor
from warpkit.errors import BreakdownError, DimensionMismatch
from warpkit.kernels import cg_solve, reduce_microbench, run_reduce, spmv_coo, spmv_csr, spmv_sellp
from warpkit.sparse import CooMatrix, coo_to_csr, coo_to_sellp, dense_spmv_reference

A = CooMatrix.from_entries(3, 3, [0, 0, 1, 2, 2], [0, 2, 1, 0, 2], [1.0, 2.0, 3.0, 4.0, 5.0])
X1 = np.array([1.0, 1.0, 1.0])


def sim_execs():
    return [make_executor("warp32"), make_executor("warp64")]


class TestReduceSubwarp:
    def test_sum_of_four(self, warp32_exec):
        results, stats = run_reduce(warp32_exec, 4, [1.0, 2.0, 3.0, 4.0])
        assert results == [10.0] * 4
        assert all(s.shuffle_ops == 2 for s in stats)
        assert warp32_exec.counters.shuffles == 2

    def test_singleton(self, warp64_exec):
        results, stats = run_reduce(warp64_exec, 1, [7.0])
        assert results == [7.0]
        assert stats[0].shuffle_ops == 0

    @pytest.mark.parametrize("exec_name,sizes", [("warp32", [1, 2, 4, 8, 16, 32]),
                                                 ("warp64", [1, 2, 4, 8, 16, 32, 64])])
    def test_shuffle_ops_equal_log2_size(self, exec_name, sizes, rng):
        for size in sizes:
            ex = make_executor(exec_name)
            values = rng.integers(-9, 9, size=size).astype(float).tolist()
            results, stats = run_reduce(ex, size, values)
            assert results == [sum(values)] * size  # integers: butterfly is exact
            assert all(s.shuffle_ops == int(math.log2(size)) for s in stats)

    def test_op_count_ratio_4_vs_64(self):
        ex = make_executor("warp64")
        _, stats4 = run_reduce(ex, 4, [1.0] * 4)
        _, stats64 = run_reduce(ex, 64, [1.0] * 64)
        ratio = stats4[0].shuffle_ops / stats64[0].shuffle_ops
        assert ratio == 2 / 6
        assert round(ratio, 3) == 0.333

    def test_op_count_ratio_4_vs_32(self):
        ex = make_executor("warp32")
        _, stats4 = run_reduce(ex, 4, [1.0] * 4)
        _, stats32 = run_reduce(ex, 32, [1.0] * 32)
        assert stats4[0].shuffle_ops / stats32[0].shuffle_ops == 0.4

    def test_other_operators(self, warp32_exec):
        results, _ = run_reduce(warp32_exec, 4, [3.0, 9.0, 2.0, 5.0], max)
        assert results == [9.0] * 4
        results, _ = run_reduce(warp32_exec, 4, [3.0, 9.0, 2.0, 5.0], operator.mul)
        assert results == [270.0] * 4

    def test_microbench_event_counts(self):
        for exec_name, ws in (("warp32", 32), ("warp64", 64)):
            for size in (4, 16):
                ex = make_executor(exec_name)
                reduce_microbench(ex, size, 10)
                subwarps = ws // size
                assert ex.counters.shuffles == 10 * int(math.log2(size)) * subwarps


class TestSpmvCoo:
    def test_hand_example(self):
        for ex in sim_execs():
            assert np.array_equal(spmv_coo(A, X1, ex), [3.0, 3.0, 9.0])

    def test_identity(self, rng):
        n = 40
        eye = diagonal_matrix(n, 1.0)
        x = rng.standard_normal(n)
        for ex in sim_execs():
            assert np.array_equal(spmv_coo(eye, x, ex), x)

    def test_integer_exact_every_seed_both_widths(self, rng):
        m = random_sparse_matrix(64, 64, 0.3, rng, integer=True)
        x = rng.integers(-5, 6, size=64).astype(np.float64)
        expected = dense_spmv_reference(m, x)
        for name in ("warp32", "warp64"):
            for seed in (1, 7, 2024):
                ex = make_executor(name, seed=seed, scramble=True)
                assert np.array_equal(spmv_coo(m, x, ex), expected)

    def test_real_within_tolerance(self, rng):
        m = random_sparse_matrix(60, 60, 0.4, rng)
        x = rng.random(60)
        expected = dense_spmv_reference(m, x)
        for ex in sim_execs():
            err = max_scaled_rel_err(spmv_coo(m, x, ex), expected, m.row_nnz())
            assert err <= 1e-10

    def test_uses_atomics(self, warp32_exec):
        spmv_coo(A, X1, warp32_exec)
        assert warp32_exec.counters.atomics > 0

    def test_dimension_mismatch(self, warp32_exec):
        with pytest.raises(DimensionMismatch):
            spmv_coo(A, np.ones(5), warp32_exec)


class TestSpmvCsr:
    def test_hand_example(self):
        csr = coo_to_csr(A)
        for ex in sim_execs():
            assert np.array_equal(spmv_csr(csr, X1, ex), [3.0, 3.0, 9.0])

    def test_empty_rows_give_zero(self):
        m = coo_to_csr(CooMatrix.from_entries(4, 4, [1, 3], [0, 2], [2.0, 5.0]))
        for ex in sim_execs():
            y = spmv_csr(m, np.ones(4), ex)
            assert np.array_equal(y, [0.0, 2.0, 0.0, 5.0])

    def test_row_longer_than_subwarp(self, rng):
        # 20 nonzeros in one row against subwarp sizes 8 and 16.
        cols = np.arange(20)
        m = coo_to_csr(CooMatrix(2, 20, np.zeros(20, dtype=int), cols, rng.integers(1, 5, 20)))
        expected = dense_spmv_reference(m, np.ones(20))
        for ex in sim_execs():
            assert np.array_equal(spmv_csr(m, np.ones(20), ex), expected)

    def test_real_within_tolerance(self, rng):
        m = coo_to_csr(random_sparse_matrix(64, 48, 0.5, rng))
        x = rng.random(48)
        expected = dense_spmv_reference(m, x)
        for ex in sim_execs():
            err = max_scaled_rel_err(spmv_csr(m, x, ex), expected, m.row_nnz())
            assert err <= 1e-10

    def test_subwarp_size_comes_from_config(self):
        # Same matrix, different csr tile width: the shuffle count per row
        # is log2(tile), so instrumentation proves the config is honored.
        csr = coo_to_csr(tridiagonal_matrix(16))
        counts = {}
        for tile in (4, 8):
            ex = make_executor(
                "warp32",
                tuning={"block_size": 256, "subwarps_per_block": 256 // tile, "csr_subwarp_size": tile},
            )
            spmv_csr(csr, np.ones(16), ex)
            counts[tile] = ex.counters.shuffles
        assert counts[4] == 16 * 2  # 16 rows x log2(4)
        assert counts[8] == 16 * 3


class TestSpmvSellp:
    def test_hand_example_slice2(self):
        sellp = coo_to_sellp(A, 2)
        for ex in sim_execs():
            assert np.array_equal(spmv_sellp(sellp, X1, ex), [3.0, 3.0, 9.0])

    def test_no_atomics_ever(self, rng):
        for _ in range(5):
            m = coo_to_sellp(random_sparse_matrix(70, 70, float(rng.random()), rng), 64)
            for ex in sim_execs():
                spmv_sellp(m, rng.random(70), ex)
                assert ex.counters.atomics == 0

    def test_padding_rows_do_not_write(self, rng):
        # 65 rows with slice 64: the last slice holds 63 padding rows.
        m = coo_to_sellp(random_sparse_matrix(65, 65, 0.2, rng), 64)
        x = rng.random(65)
        expected = dense_spmv_reference(m, x)
        for ex in sim_execs():
            y = spmv_sellp(m, x, ex)
            assert y.shape == (65,)
            assert np.array_equal(y, expected)

    def test_bit_identical_to_reference(self, rng):
        # One lane per row walks entries in the same order as the
        # sequential kernel, so sellp results match the reference bitwise.
        for _ in range(10):
            m = coo_to_sellp(random_sparse_matrix(50, 50, 0.6, rng), 8)
            x = rng.standard_normal(50)
            expected = dense_spmv_reference(m, x)
            for ex in sim_execs():
                assert np.array_equal(spmv_sellp(m, x, ex), expected)


class TestCg:
    def test_identity_converges_first_iteration(self):
        eye = coo_to_sellp(diagonal_matrix(3, 1.0), 64)
        b = np.array([1.0, 2.0, 3.0])
        for name in ("ref", "warp32", "warp64"):
            x, hist = cg_solve(eye, b, 1e-12, 50, make_executor(name))
            assert np.array_equal(x, b)
            assert len(hist) - 1 == 1

    def test_2x2_against_direct_solve(self):
        m = coo_to_sellp(CooMatrix.from_entries(2, 2, [0, 0, 1, 1], [0, 1, 0, 1],
                                                [4.0, 1.0, 1.0, 3.0]), 64)
        b = np.array([1.0, 2.0])
        expected = np.array([1.0 / 11.0, 7.0 / 11.0])  # A^-1 b computed by hand
        for name in ("ref", "warp32", "warp64"):
            x, hist = cg_solve(m, b, 1e-12, 10, make_executor(name))
            assert len(hist) - 1 <= 2
            assert np.max(np.abs(x - expected)) <= 1e-12

    def test_poisson_small_identical_iterations(self):
        m = coo_to_sellp(poisson2d_matrix(10), 64)
        b = np.ones(100)
        histories = []
        for name in ("ref", "warp32", "warp64"):
            x, hist = cg_solve(m, b, 1e-10, 1000, make_executor(name))
            histories.append(hist)
        assert len(histories[0]) == len(histories[1]) == len(histories[2])
        assert np.array_equal(histories[0], histories[1])
        assert np.array_equal(histories[0], histories[2])

    def test_a_norm_error_monotone(self):
        # Error measured against a directly solved system must shrink in
        # the A-norm at every step.
        n = 24
        m = tridiagonal_matrix(n)
        dense = m.to_dense()
        b = np.linspace(1.0, 2.0, n)
        x_star = np.linalg.solve(dense, b)
        sellp = coo_to_sellp(m, 64)
        ex = make_executor("warp32")

        errs = []
        x = np.zeros(n)
        r = b.copy()
        p = r.copy()
        rho = float(r @ r)
        for _ in range(12):
            e = x - x_star
            errs.append(float(e @ dense @ e))
            q = np.asarray(dense_spmv_reference(sellp, p))
            alpha = rho / float(p @ q)
            x = x + alpha * p
            r = r - alpha * q
            rho_next = float(r @ r)
            p = r + (rho_next / rho) * p
            rho = rho_next
        for before, after in zip(errs, errs[1:]):
            assert after <= before * (1 + 1e-12)

        # and the packaged solver reaches the same solution
        x_cg, _ = cg_solve(sellp, b, 1e-12, 200, ex)
        assert np.max(np.abs(x_cg - x_star)) <= 1e-9

    def test_breakdown_on_indefinite_matrix(self):
        m = coo_to_sellp(CooMatrix.from_entries(2, 2, [0, 1], [0, 1], [1.0, -1.0]), 64)
        with pytest.raises(BreakdownError):
            cg_solve(m, np.array([0.0, 1.0]), 1e-10, 10, make_executor("ref"))

    def test_dimension_checks(self):
        rect = coo_to_sellp(CooMatrix.from_entries(2, 3, [0], [1], [1.0]), 64)
        with pytest.raises(DimensionMismatch):
            cg_solve(rect, np.ones(2), 1e-10, 5, make_executor("ref"))
        square = coo_to_sellp(diagonal_matrix(3), 64)
        with pytest.raises(DimensionMismatch):
            cg_solve(square, np.ones(4), 1e-10, 5, make_executor("ref"))

    def test_zero_rhs(self):
        m = coo_to_sellp(diagonal_matrix(4), 64)
        x, hist = cg_solve(m, np.zeros(4), 1e-10, 5, make_executor("ref"))
        assert np.array_equal(x, np.zeros(4))
        assert len(hist) == 1


class TestBackendEquivalence:
    def test_families_all_kernels(self, rng):
        oracle = make_executor("ref")
        families = [diagonal_matrix(48), tridiagonal_matrix(48), poisson2d_matrix(6)]
        for m in families:
            x = rng.random(m.ncols)
            csr, sellp = coo_to_csr(m), coo_to_sellp(m, 64)
            y_ref = {
                "coo": spmv_coo(m, x, oracle),
                "csr": spmv_csr(csr, x, oracle),
                "sellp": spmv_sellp(sellp, x, oracle),
            }
            for ex in sim_execs():
                assert max_scaled_rel_err(spmv_coo(m, x, ex), y_ref["coo"], m.row_nnz()) <= 1e-10
                assert max_scaled_rel_err(spmv_csr(csr, x, ex), y_ref["csr"], m.row_nnz()) <= 1e-10
                assert max_scaled_rel_err(spmv_sellp(sellp, x, ex), y_ref["sellp"], m.row_nnz()) <= 1e-10
