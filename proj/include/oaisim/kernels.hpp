#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace oaisim::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

/// Sum of dense[ids[i]] * weights[i]. The scalar variant sums in index order,
/// which for sorted ids is the same order as a sorted-term merge.
using GatherDotFn = double (*)(const double* dense, std::span<const std::uint32_t> ids,
                               std::span<const double> weights);

double gather_dot_scalar(const double* dense, std::span<const std::uint32_t> ids, std::span<const double> weights);
#if defined(__x86_64__) || defined(_M_X64)
double gather_dot_avx2(const double* dense, std::span<const std::uint32_t> ids, std::span<const double> weights);
#endif
#if defined(__aarch64__)
double gather_dot_neon(const double* dense, std::span<const std::uint32_t> ids, std::span<const double> weights);
#endif

/// Reference dot product of two sparse vectors with ascending ids.
double merge_dot(std::span<const std::uint32_t> ids_a, std::span<const double> w_a,
                 std::span<const std::uint32_t> ids_b, std::span<const double> w_b);

/// Best ISA this CPU supports.
Isa detect();
bool supported(Isa isa);

/// Kernel for `isa`; falls back to scalar when unsupported.
GatherDotFn select(Isa isa);

/// Detected ISA unless OAISIM_ISA=scalar|avx2|neon overrides it.
Isa preferred();

}  // namespace oaisim::kernels
