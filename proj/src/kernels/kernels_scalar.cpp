#include "liveeval/kernels.hpp"

#include <cmath>

namespace liveeval::kernels {

double sigmoid1(double x) {
    using detail::kExpFloor;
    using detail::kProbCeil;
    if (x >= 0.0) {
        double e = std::exp(x > -kExpFloor ? kExpFloor : -x);
        double p = 1.0 / (1.0 + e);
        return p > kProbCeil ? kProbCeil : p;
    }
    double e = std::exp(x < kExpFloor ? kExpFloor : x);
    return e / (1.0 + e);
}

namespace {

void sigmoid_n(const double* x, double* out, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] = sigmoid1(x[k]);
}

double sigmoid_shift_sum(double theta, const double* beta, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += sigmoid1(theta - beta[k]);
    return s;
}

void coord_residual(double center, double sign, const double* v,
                    const uint32_t* idx, const uint8_t* y, std::size_t n,
                    double* gy, double* h) {
    double g = 0.0, hh = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double p = sigmoid1(center + sign * v[idx[k]]);
        g += static_cast<double>(y[k]) - p;
        hh += p * (1.0 - p);
    }
    *gy = g;
    *h = hh;
}

const Ops kScalarOps = {"scalar", sigmoid_n, sigmoid_shift_sum, coord_residual};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace liveeval::kernels
