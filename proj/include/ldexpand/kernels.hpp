#pragma once

#include <cstddef>

namespace ldexpand::kernels {

/// Inner loops with a scalar reference implementation and an AVX2/FMA
/// variant. Both must agree to 1e-12 relative; the FMA variant rounds once
/// per multiply-add so results are not bit-identical across variants.
struct Table {
    const char* name;
    /// out[i] += scale[i] * (c0 u[i] + c1 u[i+1] + c2 u[i+2] + c3 u[i+3])
    void (*accumulate_shifted_cubic)(double* out, const double* u, const double* scale, double c0, double c1,
                                     double c2, double c3, std::size_t n);
    /// eta[i] = m * eta[i] + s * z[i]
    void (*affine_step)(double* eta, const double* z, double m, double s, std::size_t n);
    /// acc2[i] += w2 * eta[i]^2, acc3[i] += w3 * eta[i]^3
    void (*power_accumulate)(const double* eta, double w2, double w3, double* acc2, double* acc3, std::size_t n);
};

const Table& scalar();
/// nullptr when the variant was not compiled in or the CPU lacks AVX2/FMA.
const Table* avx2();
/// Picked once: AVX2 when available unless LDEXPAND_SIMD=scalar is set.
const Table& active();

}  // namespace ldexpand::kernels
