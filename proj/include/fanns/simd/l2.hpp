#pragma once

#include <cstddef>

// Squared-L2 kernels. The scalar loop is the reference; vectorized
// variants are selected once at startup based on CPU capability and
// must agree with the reference within floating-point reassociation
// error (covered by the equivalence tests).

namespace fanns::simd {

using L2Fn = float (*)(const float*, const float*, std::size_t);

float l2_sq_scalar(const float* a, const float* b, std::size_t d);

#if defined(__x86_64__) || defined(_M_X64)
float l2_sq_avx2(const float* a, const float* b, std::size_t d);
bool cpu_has_avx2();
#endif

#if defined(__aarch64__)
float l2_sq_neon(const float* a, const float* b, std::size_t d);
#endif

// Dispatched entry point and the name of the active kernel.
L2Fn l2_kernel();
const char* l2_kernel_name();

inline float l2_sq(const float* a, const float* b, std::size_t d) {
    return l2_kernel()(a, b, d);
}

}  // namespace fanns::simd
