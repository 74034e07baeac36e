#pragma once
// Numeric kernels behind the fitting/estimation hot loops. `scalar` is the
// semantic reference (libm exp); the SIMD variants must agree with it to tight
// tolerance and are selected at runtime by active_ops(). Set
// LIVEEVAL_KERNELS=scalar|avx2|neon to force a particular path (falls back to
// scalar with a note on stderr if the requested ISA is unavailable).
//
// All kernels are pure and bit-deterministic for a fixed implementation:
// vector lanes are combined in a fixed order and tails are handled the same
// way on every call.
#include <cstddef>
#include <cstdint>

namespace liveeval::kernels {

struct Ops {
    const char* name;

    // out[k] = 1/(1+exp(-x[k])), clamped to the open interval (0,1) even for
    // arguments beyond double's exp range.
    void (*sigmoid)(const double* x, double* out, std::size_t n);

    // Returns sum_k sigmoid(theta - beta[k]).
    double (*sigmoid_shift_sum)(double theta, const double* beta, std::size_t n);

    // Newton residuals for one coordinate against its observation list:
    //   p_k = sigmoid(center + sign * v[idx[k]])
    //   *gy = sum_k (y[k] - p_k)       (gradient numerator, before any penalty)
    //   *h  = sum_k p_k * (1 - p_k)    (curvature)
    void (*coord_residual)(double center, double sign, const double* v,
                           const uint32_t* idx, const uint8_t* y, std::size_t n,
                           double* gy, double* h);
};

const Ops& scalar_ops();
const Ops* avx2_ops_or_null();  // null unless built for and running on AVX2+FMA
const Ops* neon_ops_or_null();  // null unless built for aarch64

// Selection logic without the env lookup, for tests: forced may be nullptr
// (platform default), "scalar", "avx2" or "neon".
const Ops& select_ops(const char* forced);

// Runtime-selected implementation, cached after the first call (reads
// LIVEEVAL_KERNELS once).
const Ops& active_ops();

// Scalar reference for a single value; used by kernels for loop tails and by
// code that wants one sigmoid without going through an array.
double sigmoid1(double x);

namespace detail {
// Probabilities are clamped into the open interval (0,1): the logistic never
// reaches its asymptotes and downstream log() calls stay finite. kExpFloor
// keeps exp() arguments in positive-normal range. Every implementation clamps
// the same way so they agree even at extreme arguments.
inline constexpr double kProbCeil = 0x1.fffffffffffffp-1;  // largest double < 1
inline constexpr double kExpFloor = -708.0;
}  // namespace detail

}  // namespace liveeval::kernels
