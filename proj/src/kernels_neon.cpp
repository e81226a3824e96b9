#include <arm_neon.h>

#include "oaisim/kernels.hpp"

namespace oaisim::kernels {

double gather_dot_neon(const double* dense, std::span<const std::uint32_t> ids, std::span<const double> weights) {
    const std::size_t n = ids.size();
    std::size_t i = 0;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (; i + 2 <= n; i += 2) {
        float64x2_t gathered = vdupq_n_f64(dense[ids[i]]);
        gathered = vsetq_lane_f64(dense[ids[i + 1]], gathered, 1);
        acc = vaddq_f64(acc, vmulq_f64(gathered, vld1q_f64(weights.data() + i)));
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) sum += dense[ids[i]] * weights[i];
    return sum;
}

}  // namespace oaisim::kernels
