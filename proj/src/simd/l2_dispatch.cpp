#include "fanns/simd/l2.hpp"

namespace fanns::simd {

namespace {

struct Selected {
    L2Fn fn;
    const char* name;
};

Selected select() {
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2()) return {&l2_sq_avx2, "avx2"};
#endif
#if defined(__aarch64__)
    return {&l2_sq_neon, "neon"};
#endif
    return {&l2_sq_scalar, "scalar"};
}

const Selected g_selected = select();

}  // namespace

L2Fn l2_kernel() { return g_selected.fn; }
const char* l2_kernel_name() { return g_selected.name; }

}  // namespace fanns::simd
