#ifndef GPU_COMPONENTS_ATOMIC_CUH_
#define GPU_COMPONENTS_ATOMIC_CUH_

#include <thrust/complex.h>

namespace gpu {

// Component-wise complex atomic add: the two updates are independent, so
// no ordering across the pair is guaranteed.
__device__ void atomic_add(thrust::complex<double> *address,
                           thrust::complex<double> value)
{
    double *parts = reinterpret_cast<double *>(address);
    atomicAdd(parts, value.real());
    atomicAdd(parts + 1, value.imag());
}

__device__ double atomic_add(double *address, double value)
{
    return atomicAdd(address, value);
}

}  // namespace gpu

#endif  // GPU_COMPONENTS_ATOMIC_CUH_
