#include "liveeval/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace liveeval::kernels {
namespace {

// Same scheme as the AVX2 variant, on 2-wide float64 lanes: Cody-Waite
// reduction, degree-13 Taylor for exp(r), 2^k scaling via the exponent bits.
inline float64x2_t vexp_nonpos(float64x2_t t) {
    const float64x2_t kLog2e = vdupq_n_f64(1.44269504088896340736);
    const float64x2_t kLn2Hi = vdupq_n_f64(6.93147180369123816490e-01);
    const float64x2_t kLn2Lo = vdupq_n_f64(1.90821492927058770002e-10);
    t = vmaxq_f64(t, vdupq_n_f64(detail::kExpFloor));
    float64x2_t k = vrndnq_f64(vmulq_f64(t, kLog2e));
    float64x2_t r = vfmsq_f64(t, k, kLn2Hi);  // t - k*ln2_hi
    r = vfmsq_f64(r, k, kLn2Lo);

    float64x2_t p = vdupq_n_f64(1.0 / 6227020800.0);  // 1/13!
    p = vfmaq_f64(vdupq_n_f64(1.0 / 479001600.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0 / 39916800.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0 / 3628800.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0 / 362880.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0 / 40320.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0 / 5040.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0 / 720.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0 / 120.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0 / 24.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0 / 6.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(0.5), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0), p, r);
    p = vfmaq_f64(vdupq_n_f64(1.0), p, r);

    int64x2_t ki = vcvtq_s64_f64(k);  // k is integral, conversion is exact
    int64x2_t ebits = vshlq_n_s64(vaddq_s64(ki, vdupq_n_s64(1023)), 52);
    return vmulq_f64(p, vreinterpretq_f64_s64(ebits));
}

inline float64x2_t vsigmoid2(float64x2_t x) {
    const float64x2_t kZero = vdupq_n_f64(0.0);
    const float64x2_t kOne = vdupq_n_f64(1.0);
    float64x2_t e = vexp_nonpos(vnegq_f64(vabsq_f64(x)));
    float64x2_t denom = vaddq_f64(kOne, e);
    float64x2_t p_pos = vdivq_f64(kOne, denom);
    float64x2_t p_neg = vdivq_f64(e, denom);
    uint64x2_t nonneg = vcgeq_f64(x, kZero);
    float64x2_t p = vbslq_f64(nonneg, p_pos, p_neg);
    return vminq_f64(p, vdupq_n_f64(detail::kProbCeil));
}

inline double hsum(float64x2_t v) {
    return vgetq_lane_f64(v, 0) + vgetq_lane_f64(v, 1);
}

void sigmoid_n(const double* x, double* out, std::size_t n) {
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) vst1q_f64(out + k, vsigmoid2(vld1q_f64(x + k)));
    for (; k < n; ++k) out[k] = sigmoid1(x[k]);
}

double sigmoid_shift_sum(double theta, const double* beta, std::size_t n) {
    float64x2_t th = vdupq_n_f64(theta);
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2)
        acc = vaddq_f64(acc, vsigmoid2(vsubq_f64(th, vld1q_f64(beta + k))));
    double s = hsum(acc);
    for (; k < n; ++k) s += sigmoid1(theta - beta[k]);
    return s;
}

void coord_residual(double center, double sign, const double* v,
                    const uint32_t* idx, const uint8_t* y, std::size_t n,
                    double* gy, double* h) {
    float64x2_t cv = vdupq_n_f64(center);
    float64x2_t sv = vdupq_n_f64(sign);
    float64x2_t kOne = vdupq_n_f64(1.0);
    float64x2_t gacc = vdupq_n_f64(0.0);
    float64x2_t hacc = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        double tv[2] = {v[idx[k]], v[idx[k + 1]]};  // no f64 gather on NEON
        double ty[2] = {static_cast<double>(y[k]), static_cast<double>(y[k + 1])};
        float64x2_t vv = vld1q_f64(tv);
        float64x2_t yd = vld1q_f64(ty);
        float64x2_t p = vsigmoid2(vfmaq_f64(cv, sv, vv));
        gacc = vaddq_f64(gacc, vsubq_f64(yd, p));
        hacc = vfmaq_f64(hacc, p, vsubq_f64(kOne, p));
    }
    double g = hsum(gacc), hh = hsum(hacc);
    for (; k < n; ++k) {
        double p = sigmoid1(center + sign * v[idx[k]]);
        g += static_cast<double>(y[k]) - p;
        hh += p * (1.0 - p);
    }
    *gy = g;
    *h = hh;
}

const Ops kNeonOps = {"neon", sigmoid_n, sigmoid_shift_sum, coord_residual};

}  // namespace

const Ops* neon_ops_or_null() { return &kNeonOps; }

}  // namespace liveeval::kernels

#else  // not an aarch64 build

namespace liveeval::kernels {
const Ops* neon_ops_or_null() { return nullptr; }
}  // namespace liveeval::kernels

#endif
