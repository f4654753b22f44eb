#include "fanns/simd/l2.hpp"

namespace fanns::simd {

float l2_sq_scalar(const float* a, const float* b, std::size_t d) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < d; ++i) {
        const float diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace fanns::simd
