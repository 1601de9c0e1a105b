"""Synthetic matrix families for the benchmark harness and tests.

Generates diagonal, tridiagonal, 2-D Poisson, and random-density matrices
and can write a MatrixMarket corpus directory, so no downloads are needed
at desk scale. External collection files can be dropped into the same
directory and are picked up like any other ``.mtx`` file.
"""

import argparse
from pathlib import Path

import numpy as np

from .sparse import CooMatrix, write_matrix_market


def diagonal_matrix(n: int, value: float = 2.0) -> CooMatrix:
    idx = np.arange(n)
    return CooMatrix(n, n, idx, idx, np.full(n, value))


def tridiagonal_matrix(n: int, diag: float = 2.0, off: float = -1.0) -> CooMatrix:
    rows, cols, vals = [], [], []
    for i in range(n):
        if i > 0:
            rows.append(i); cols.append(i - 1); vals.append(off)
        rows.append(i); cols.append(i); vals.append(diag)
        if i < n - 1:
            rows.append(i); cols.append(i + 1); vals.append(off)
    return CooMatrix(n, n, rows, cols, vals)


def poisson2d_matrix(nx: int, ny: int = None) -> CooMatrix:
    """Standard 5-point stencil on an nx-by-ny grid; SPD."""
    ny = nx if ny is None else ny
    n = nx * ny
    rows, cols, vals = [], [], []
    for j in range(ny):
        for i in range(nx):
            r = j * nx + i
            if j > 0:
                rows.append(r); cols.append(r - nx); vals.append(-1.0)
            if i > 0:
                rows.append(r); cols.append(r - 1); vals.append(-1.0)
            rows.append(r); cols.append(r); vals.append(4.0)
            if i < nx - 1:
                rows.append(r); cols.append(r + 1); vals.append(-1.0)
            if j < ny - 1:
                rows.append(r); cols.append(r + nx); vals.append(-1.0)
    return CooMatrix(n, n, rows, cols, vals)


def random_sparse_matrix(nrows: int, ncols: int, density: float, rng,
                         *, integer: bool = False) -> CooMatrix:
    """Uniform random pattern; values in [0, 1) or small positive integers.

    Nonnegative values keep row sums free of cancellation, which makes the
    reassociation tolerance of the simulated kernels easy to reason about.
    """
    mask = rng.random((nrows, ncols)) < density
    rows, cols = np.nonzero(mask)
    if integer:
        vals = rng.integers(1, 10, size=len(rows)).astype(np.float64)
    else:
        vals = rng.random(len(rows))
    return CooMatrix.from_entries(nrows, ncols, rows, cols, vals)


def stage_external_corpus(files, dest) -> list:
    """Validate and stage user-supplied MatrixMarket files (for example
    SuiteSparse collection downloads) into a corpus directory.

    No downloading happens here: files come from the user. Unreadable
    files are rejected up front so the bench run never sees them.
    """
    from .sparse import read_matrix_market

    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    staged = []
    for source in files:
        source = Path(source)
        read_matrix_market(source)  # raises ParseError/UnsupportedFormat on bad input
        target = dest / source.name
        target.write_bytes(source.read_bytes())
        staged.append(target)
    return staged


def generate_corpus(out_dir, seed: int = 42) -> list:
    """Write the default synthetic corpus; returns the created paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    cases = {
        "diag_64": diagonal_matrix(64),
        "tridiag_64": tridiagonal_matrix(64),
        "poisson_8x8": poisson2d_matrix(8),
        "rand_48_d10": random_sparse_matrix(48, 48, 0.10, rng),
        "rand_64_d30": random_sparse_matrix(64, 64, 0.30, rng),
        "rand_int_64_d30": random_sparse_matrix(64, 64, 0.30, rng, integer=True),
    }
    paths = []
    for name, matrix in sorted(cases.items()):
        path = out_dir / f"{name}.mtx"
        write_matrix_market(matrix, path)
        paths.append(path)
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Generate the synthetic matrix corpus.")
    parser.add_argument("out_dir", help="directory to write .mtx files into")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args(argv)
    for path in generate_corpus(args.out_dir, seed=args.seed):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
