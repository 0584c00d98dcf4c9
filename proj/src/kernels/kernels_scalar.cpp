#include "ldexpand/kernels.hpp"

namespace ldexpand::kernels {

namespace {

void accumulate_shifted_cubic(double* out, const double* u, const double* scale, double c0, double c1, double c2,
                              double c3, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += scale[i] * (c0 * u[i] + c1 * u[i + 1] + c2 * u[i + 2] + c3 * u[i + 3]);
}

void affine_step(double* eta, const double* z, double m, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) eta[i] = m * eta[i] + s * z[i];
}

void power_accumulate(const double* eta, double w2, double w3, double* acc2, double* acc3, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double e2 = eta[i] * eta[i];
        acc2[i] += w2 * e2;
        acc3[i] += w3 * e2 * eta[i];
    }
}

}  // namespace

const Table& scalar() {
    static const Table t{"scalar", accumulate_shifted_cubic, affine_step, power_accumulate};
    return t;
}

}  // namespace ldexpand::kernels
