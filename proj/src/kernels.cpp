#include "oaisim/kernels.hpp"

#include <cstdlib>
#include <string>

namespace oaisim::kernels {

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
        case Isa::scalar: break;
    }
    return "scalar";
}

double gather_dot_scalar(const double* dense, std::span<const std::uint32_t> ids, std::span<const double> weights) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) sum += dense[ids[i]] * weights[i];
    return sum;
}

double merge_dot(std::span<const std::uint32_t> ids_a, std::span<const double> w_a,
                 std::span<const std::uint32_t> ids_b, std::span<const double> w_b) {
    double sum = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ids_a.size() && j < ids_b.size()) {
        if (ids_a[i] < ids_b[j]) {
            ++i;
        } else if (ids_b[j] < ids_a[i]) {
            ++j;
        } else {
            sum += w_a[i] * w_b[j];
            ++i;
            ++j;
        }
    }
    return sum;
}

bool supported(Isa isa) {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa detect() {
    if (supported(Isa::avx2)) return Isa::avx2;
    if (supported(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

GatherDotFn select(Isa isa) {
    if (!supported(isa)) return gather_dot_scalar;
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::avx2: return gather_dot_avx2;
#endif
#if defined(__aarch64__)
        case Isa::neon: return gather_dot_neon;
#endif
        default: return gather_dot_scalar;
    }
}

Isa preferred() {
    if (const char* env = std::getenv("OAISIM_ISA")) {
        const std::string want(env);
        if (want == "scalar") return Isa::scalar;
        if (want == "avx2" && supported(Isa::avx2)) return Isa::avx2;
        if (want == "neon" && supported(Isa::neon)) return Isa::neon;
    }
    return detect();
}

}  // namespace oaisim::kernels
