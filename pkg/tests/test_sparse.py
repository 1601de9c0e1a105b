"""Formats, conversions, MatrixMarket parsing, and the dense oracle."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpkit.errors import DimensionMismatch, InvalidSliceSize, ParseError, UnsupportedFormat
from warpkit.corpus import diagonal_matrix, random_sparse_matrix
from warpkit.sparse import (
    CooMatrix,
    CsrMatrix,
    SellpMatrix,
    coo_to_csr,
    coo_to_sellp,
    dense_spmv_reference,
    read_matrix_market,
    write_matrix_market,
)

A_DENSE = np.array([[1.0, 0.0, 2.0], [0.0, 3.0, 0.0], [4.0, 0.0, 5.0]])


def coo_from_dense(dense):
    rows, cols = np.nonzero(dense)
    return CooMatrix(dense.shape[0], dense.shape[1], rows, cols, dense[rows, cols])


@pytest.fixture
def a_coo():
    return coo_from_dense(A_DENSE)


class TestCooMatrix:
    def test_rejects_out_of_bounds(self):
        with pytest.raises(ValueError):
            CooMatrix(2, 2, [0, 3], [0, 0], [1.0, 1.0])

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            CooMatrix(2, 2, [1, 0], [0, 0], [1.0, 1.0])

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            CooMatrix(2, 2, [0, 0], [1, 1], [1.0, 1.0])

    def test_from_entries_sorts_and_sums(self):
        m = CooMatrix.from_entries(2, 2, [1, 0, 1], [0, 1, 0], [1.0, 2.0, 3.0])
        assert m.row_idx.tolist() == [0, 1]
        assert m.col_idx.tolist() == [1, 0]
        assert m.values.tolist() == [2.0, 4.0]

    def test_symmetry_detection(self):
        sym = CooMatrix.from_entries(2, 2, [0, 0, 1, 1], [0, 1, 0, 1], [2.0, 5.0, 5.0, 3.0])
        asym = CooMatrix.from_entries(2, 2, [0, 1], [1, 0], [5.0, 6.0])
        assert sym.is_symmetric()
        assert not asym.is_symmetric()


class TestCooToCsr:
    def test_counting_oracle_example(self, a_coo):
        csr = coo_to_csr(a_coo)
        assert csr.row_ptrs.tolist() == [0, 2, 3, 5]
        assert csr.col_idx.tolist() == [0, 2, 1, 0, 2]
        assert csr.values.tolist() == [1.0, 2.0, 3.0, 4.0, 5.0]

    def test_empty_matrix(self):
        csr = coo_to_csr(CooMatrix(2, 2, [], [], []))
        assert csr.row_ptrs.tolist() == [0, 0, 0]

    def test_single_entry(self):
        csr = coo_to_csr(CooMatrix(1, 1, [0], [0], [7.0]))
        assert csr.row_ptrs.tolist() == [0, 1]
        assert csr.values.tolist() == [7.0]

    def test_row_ptr_counts_match_rows(self, rng):
        m = random_sparse_matrix(20, 17, 0.3, rng)
        csr = coo_to_csr(m)
        counts = np.bincount(m.row_idx, minlength=m.nrows)
        assert np.array_equal(np.diff(csr.row_ptrs), counts)


class TestCooToSellp:
    def test_layout_example_slice2(self, a_coo):
        sellp = coo_to_sellp(a_coo, 2)
        assert sellp.nslices == 2
        assert sellp.slice_sets.tolist() == [0, 2, 4]
        assert sellp.slice_width(0) == 2 and sellp.slice_width(1) == 2
        assert sellp.row_lengths.tolist() == [2, 1, 2]
        assert np.array_equal(sellp.to_dense(), A_DENSE)
        # row 1 is padded with one zero entry in slice 0
        assert sellp.values[1 * 2 + 1] == 0.0 and sellp.col_idx[1 * 2 + 1] == 0

    def test_diagonal_no_padding_columns(self):
        sellp = coo_to_sellp(diagonal_matrix(4), 2)
        assert all(sellp.slice_width(s) == 1 for s in range(sellp.nslices))
        assert sellp.nnz == 4

    def test_empty_matrix_zero_width(self):
        sellp = coo_to_sellp(CooMatrix(2, 2, [], [], []), 2)
        assert sellp.slice_sets.tolist() == [0, 0]
        assert len(sellp.values) == 0

    def test_invalid_slice_size(self, a_coo):
        for bad in (0, 3, 12):
            with pytest.raises(InvalidSliceSize):
                coo_to_sellp(a_coo, bad)

    def test_storage_bound(self, rng):
        m = random_sparse_matrix(37, 20, 0.25, rng)
        for s in (1, 4, 16):
            sellp = coo_to_sellp(m, s)
            widths = np.diff(sellp.slice_sets)
            assert len(sellp.values) == int(widths.sum()) * s


class TestConversionRoundTrip:
    def test_randomized_conversions_preserve_dense(self, rng):
        slice_sizes = [1, 2, 4, 8, 16, 32, 64]
        cases = 0
        for _ in range(100):
            nrows = int(rng.integers(1, 65))
            ncols = int(rng.integers(1, 65))
            density = float(rng.random())
            m = random_sparse_matrix(nrows, ncols, density, rng)
            dense = m.to_dense()
            assert np.array_equal(dense, coo_to_csr(m).to_dense())
            for s in slice_sizes:
                assert np.array_equal(dense, coo_to_sellp(m, s).to_dense())
            cases += 1
        assert cases == 100

    @given(
        nrows=st.integers(1, 12),
        ncols=st.integers(1, 12),
        seed=st.integers(0, 10_000),
        slice_size=st.sampled_from([1, 2, 4, 8]),
    )
    @settings(max_examples=60, deadline=None)
    def test_conversion_round_trip_property(self, nrows, ncols, seed, slice_size):
        m = random_sparse_matrix(nrows, ncols, 0.4, np.random.default_rng(seed))
        dense = m.to_dense()
        assert np.array_equal(dense, coo_to_csr(m).to_dense())
        assert np.array_equal(dense, coo_to_sellp(m, slice_size).to_dense())


class TestMatrixMarket:
    def test_diagonal_example(self):
        text = "\n".join([
            "%%MatrixMarket matrix coordinate real general",
            "3 3 3",
            "1 1 1.0",
            "2 2 2.0",
            "3 3 3.0",
        ])
        m = read_matrix_market(io.BytesIO(text.encode()))
        assert np.array_equal(m.to_dense(), np.diag([1.0, 2.0, 3.0]))

    def test_symmetric_expansion_matches_dense_reconstruction(self):
        text = "\n".join([
            "%%MatrixMarket matrix coordinate real symmetric",
            "3 3 3",
            "1 1 2.0",
            "2 1 5.0",
            "3 3 1.0",
        ])
        m = read_matrix_market(text)
        expected = np.array([[2.0, 5.0, 0.0], [5.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert np.array_equal(m.to_dense(), expected)
        pairs = set(zip(m.row_idx.tolist(), m.col_idx.tolist()))
        assert (0, 1) in pairs and (1, 0) in pairs

    def test_out_of_bounds_entry(self):
        text = "\n".join([
            "%%MatrixMarket matrix coordinate real general",
            "3 3 1",
            "4 1 1.0",
        ])
        with pytest.raises(ParseError):
            read_matrix_market(text)

    def test_pattern_field_gets_unit_values(self):
        text = "\n".join([
            "%%MatrixMarket matrix coordinate pattern general",
            "2 2 2",
            "1 1",
            "2 2",
        ])
        m = read_matrix_market(text)
        assert m.values.tolist() == [1.0, 1.0]

    def test_integer_field(self):
        text = "\n".join([
            "%%MatrixMarket matrix coordinate integer general",
            "2 2 1",
            "2 1 7",
        ])
        m = read_matrix_market(text)
        assert m.values.tolist() == [7.0]

    def test_duplicates_are_summed(self):
        text = "\n".join([
            "%%MatrixMarket matrix coordinate real general",
            "2 2 2",
            "1 1 1.5",
            "1 1 2.5",
        ])
        m = read_matrix_market(text)
        assert m.nnz == 1 and m.values[0] == 4.0

    def test_comments_and_blank_lines_ignored(self):
        text = "\n".join([
            "%%MatrixMarket matrix coordinate real general",
            "% a comment",
            "",
            "2 2 1",
            "% another",
            "1 2 3.0",
        ])
        m = read_matrix_market(text)
        assert m.nnz == 1

    def test_unsupported_complex_field(self):
        with pytest.raises(UnsupportedFormat):
            read_matrix_market("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1.0 2.0")

    def test_unsupported_array_format(self):
        with pytest.raises(UnsupportedFormat):
            read_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1.0\n2.0\n3.0\n4.0")

    def test_unsupported_skew_symmetry(self):
        with pytest.raises(UnsupportedFormat):
            read_matrix_market("%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 1.0")

    def test_malformed_banner(self):
        with pytest.raises(ParseError):
            read_matrix_market("%%NotMatrixMarket whatever\n1 1 1\n1 1 1.0")

    def test_wrong_entry_count(self):
        with pytest.raises(ParseError):
            read_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0")

    def test_malformed_entry_fields(self):
        with pytest.raises(ParseError):
            read_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1.0")

    def test_round_trip_exact(self, rng):
        m = random_sparse_matrix(23, 31, 0.2, rng)
        # awkward values: negatives, tiny and huge magnitudes
        values = m.values * np.logspace(-120, 100, m.nnz) * np.where(np.arange(m.nnz) % 2, -1, 1)
        m = CooMatrix(m.nrows, m.ncols, m.row_idx, m.col_idx, values)
        text = write_matrix_market(m)
        back = read_matrix_market(text)
        assert back.nrows == m.nrows and back.ncols == m.ncols
        assert np.array_equal(back.row_idx, m.row_idx)
        assert np.array_equal(back.col_idx, m.col_idx)
        assert np.array_equal(back.values, m.values)

    def test_round_trip_through_file(self, tmp_path, rng):
        m = random_sparse_matrix(8, 8, 0.5, rng)
        path = tmp_path / "m.mtx"
        write_matrix_market(m, path)
        back = read_matrix_market(path)
        assert np.array_equal(back.to_dense(), m.to_dense())


class TestDenseReference:
    def test_hand_example_all_formats(self, a_coo):
        x = np.array([1.0, 1.0, 1.0])
        expected = np.array([3.0, 3.0, 9.0])
        assert np.array_equal(dense_spmv_reference(a_coo, x), expected)
        assert np.array_equal(dense_spmv_reference(coo_to_csr(a_coo), x), expected)
        assert np.array_equal(dense_spmv_reference(coo_to_sellp(a_coo, 2), x), expected)
        assert np.array_equal(dense_spmv_reference(A_DENSE, x), expected)

    def test_identity(self):
        eye = coo_from_dense(np.eye(3))
        x = np.array([5.0, 6.0, 7.0])
        assert np.array_equal(dense_spmv_reference(eye, x), x)

    def test_zero_matrix(self):
        zero = CooMatrix(3, 3, [], [], [])
        assert np.array_equal(dense_spmv_reference(zero, np.ones(3)), np.zeros(3))

    def test_dimension_mismatch(self, a_coo):
        with pytest.raises(DimensionMismatch):
            dense_spmv_reference(a_coo, np.ones(4))

    def test_formats_agree_bitwise(self, rng):
        # Same per-row fold order in every sequential path.
        for _ in range(20):
            m = random_sparse_matrix(30, 30, float(rng.random()), rng)
            x = rng.standard_normal(30)
            y_coo = dense_spmv_reference(m, x)
            y_csr = dense_spmv_reference(coo_to_csr(m), x)
            y_sellp = dense_spmv_reference(coo_to_sellp(m, 8), x)
            assert np.array_equal(y_coo, y_csr)
            assert np.array_equal(y_coo, y_sellp)
