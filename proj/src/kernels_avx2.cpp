// Built with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include "oaisim/kernels.hpp"

namespace oaisim::kernels {

double gather_dot_avx2(const double* dense, std::span<const std::uint32_t> ids, std::span<const double> weights) {
    const std::size_t n = ids.size();
    std::size_t i = 0;
    __m256d acc = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(ids.data() + i));
        const __m256d gathered = _mm256_i32gather_pd(dense, idx, 8);
        const __m256d w = _mm256_loadu_pd(weights.data() + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(gathered, w));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) sum += dense[ids[i]] * weights[i];
    return sum;
}

}  // namespace oaisim::kernels
