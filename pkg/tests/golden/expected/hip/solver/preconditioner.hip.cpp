#include <hipblas.h>
#include <hipsparse.h>

#include "hip/base/types.hip.hpp"

namespace gpu {
namespace precond {

template <typename ValueType>
__global__ void jacobi_apply(int n, const ValueType *diag, const ValueType *r,
                             ValueType *z)
{
    int i = threadIdx.x + blockDim.x * blockIdx.x;
    if (i < n) {
        z[i] = r[i] / diag[i];
    }
}

}  // namespace precond
}  // namespace gpu

void apply_jacobi(int n, const double *diag, const double *r, double *z,
                  const gpu::exec_settings &settings)
{
    hipLaunchKernelGGL(HIP_KERNEL_NAME(gpu::precond::jacobi_apply<double>), (n + 511) / 512, 512, 0, settings.stream, n, diag, r, z);
}

const char *blas_status_name(hipblasStatus_t status)
{
    return status == HIPBLAS_STATUS_SUCCESS ? "ok" : "error";
}
