#include <cstdlib>
#include <cstring>

#include "ldexpand/kernels.hpp"

namespace ldexpand::kernels {

#if defined(LDEXPAND_HAVE_AVX2)
const Table& avx2_table();
#endif

const Table* avx2() {
#if defined(LDEXPAND_HAVE_AVX2)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const Table& active() {
    static const Table& t = [] () -> const Table& {
        const char* env = std::getenv("LDEXPAND_SIMD");
        if (env && std::strcmp(env, "scalar") == 0) return scalar();
        const Table* v = avx2();
        return v ? *v : scalar();
    }();
    return t;
}

}  // namespace ldexpand::kernels
