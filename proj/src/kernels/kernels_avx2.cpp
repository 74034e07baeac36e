#include "liveeval/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cstring>

namespace liveeval::kernels {
namespace {

// exp(t) for t <= 0 (floored at kExpFloor): Cody-Waite range reduction
// t = k*ln2 + r with |r| <= ln2/2, degree-13 Taylor polynomial for exp(r),
// then exact 2^k scaling through the exponent bits. Max error is ~2 ulp over
// the domain; agreement with libm exp is asserted by the kernel tests.
inline __m256d vexp_nonpos(__m256d t) {
    const __m256d kLog2e = _mm256_set1_pd(1.44269504088896340736);
    const __m256d kLn2Hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d kLn2Lo = _mm256_set1_pd(1.90821492927058770002e-10);
    t = _mm256_max_pd(t, _mm256_set1_pd(detail::kExpFloor));
    __m256d k = _mm256_round_pd(_mm256_mul_pd(t, kLog2e),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, kLn2Hi, t);
    r = _mm256_fnmadd_pd(k, kLn2Lo, r);

    __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);  // 1/13!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    __m128i k32 = _mm256_cvtpd_epi32(k);
    __m256i k64 = _mm256_cvtepi32_epi64(k32);
    __m256i ebits =
        _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(p, _mm256_castsi256_pd(ebits));
}

inline __m256d vsigmoid(__m256d x) {
    const __m256d kZero = _mm256_setzero_pd();
    const __m256d kOne = _mm256_set1_pd(1.0);
    __m256d ax = _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);  // |x|
    __m256d e = vexp_nonpos(_mm256_sub_pd(kZero, ax));       // exp(-|x|)
    __m256d denom = _mm256_add_pd(kOne, e);
    __m256d p_pos = _mm256_div_pd(kOne, denom);
    __m256d p_neg = _mm256_div_pd(e, denom);
    __m256d nonneg = _mm256_cmp_pd(x, kZero, _CMP_GE_OQ);
    __m256d p = _mm256_blendv_pd(p_neg, p_pos, nonneg);
    return _mm256_min_pd(p, _mm256_set1_pd(detail::kProbCeil));
}

// Lanes are always combined as (l0+l1)+(l2+l3) so results are reproducible.
inline double hsum(__m256d v) {
    alignas(32) double l[4];
    _mm256_store_pd(l, v);
    return (l[0] + l[1]) + (l[2] + l[3]);
}

void sigmoid_n(const double* x, double* out, std::size_t n) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4)
        _mm256_storeu_pd(out + k, vsigmoid(_mm256_loadu_pd(x + k)));
    for (; k < n; ++k) out[k] = sigmoid1(x[k]);
}

double sigmoid_shift_sum(double theta, const double* beta, std::size_t n) {
    __m256d th = _mm256_set1_pd(theta);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d x = _mm256_sub_pd(th, _mm256_loadu_pd(beta + k));
        acc = _mm256_add_pd(acc, vsigmoid(x));
    }
    double s = hsum(acc);
    for (; k < n; ++k) s += sigmoid1(theta - beta[k]);
    return s;
}

void coord_residual(double center, double sign, const double* v,
                    const uint32_t* idx, const uint8_t* y, std::size_t n,
                    double* gy, double* h) {
    __m256d cv = _mm256_set1_pd(center);
    __m256d sv = _mm256_set1_pd(sign);
    __m256d kOne = _mm256_set1_pd(1.0);
    __m256d gacc = _mm256_setzero_pd();
    __m256d hacc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k));
        __m256d vv = _mm256_i32gather_pd(v, vi, 8);
        uint32_t yw;
        std::memcpy(&yw, y + k, 4);
        __m256d yd = _mm256_cvtepi32_pd(_mm_cvtepu8_epi32(_mm_cvtsi32_si128(
            static_cast<int>(yw))));
        __m256d p = vsigmoid(_mm256_fmadd_pd(sv, vv, cv));
        gacc = _mm256_add_pd(gacc, _mm256_sub_pd(yd, p));
        hacc = _mm256_fmadd_pd(p, _mm256_sub_pd(kOne, p), hacc);
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

const Ops kAvx2Ops = {"avx2", sigmoid_n, sigmoid_shift_sum, coord_residual};

}  // namespace

const Ops* avx2_ops_or_null() {
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return &kAvx2Ops;
    return nullptr;
}

}  // namespace liveeval::kernels

#else  // not an AVX2 build

namespace liveeval::kernels {
const Ops* avx2_ops_or_null() { return nullptr; }
}  // namespace liveeval::kernels

#endif
