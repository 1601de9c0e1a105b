#include <hipsparse.h>

#include "hip/components/reduce.hip.hpp"

namespace gpu {
namespace csr {

template <int subwarp_size>
__global__ void spmv(int nrows, const int *row_ptrs, const int *col_idx,
                     const double *vals, const double *x, double *y)
{
    int subwarp = (threadIdx.x + blockDim.x * blockIdx.x) / subwarp_size;
    int rank = threadIdx.x % subwarp_size;
    int stride = gridDim.x * blockDim.x / subwarp_size;
    for (int row = subwarp; row < nrows; row += stride) {
        double acc = 0.0;
        for (int k = row_ptrs[row] + rank; k < row_ptrs[row + 1]; k += subwarp_size) {
            acc += vals[k] * x[col_idx[k]];
        }
        acc = reduce_subwarp<subwarp_size>(acc);
        if (rank == 0) {
            y[row] = acc;
        }
    }
}

}  // namespace csr
}  // namespace gpu

void csr_spmv(int nrows, const int *row_ptrs, const int *col_idx,
              const double *vals, const double *x, double *y)
{
    hipLaunchKernelGGL(HIP_KERNEL_NAME(gpu::csr::spmv<8>), 32, 256, 0, 0, nrows, row_ptrs, col_idx, vals, x, y);
}

hipsparseStatus_t vendor_csr_spmv(hipsparseHandle_t handle)
{
    // Placeholder for the vendor library path.
    return hipsparseCreate(&handle) == HIPSPARSE_STATUS_SUCCESS
               ? HIPSPARSE_STATUS_SUCCESS
               : HIPSPARSE_STATUS_INTERNAL_ERROR;
}
