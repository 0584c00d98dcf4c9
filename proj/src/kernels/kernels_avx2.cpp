#include <immintrin.h>

#include "ldexpand/kernels.hpp"

namespace ldexpand::kernels {

namespace {

void accumulate_shifted_cubic(double* out, const double* u, const double* scale, double c0, double c1, double c2,
                              double c3, std::size_t n) {
    const __m256d v0 = _mm256_set1_pd(c0), v1 = _mm256_set1_pd(c1), v2 = _mm256_set1_pd(c2), v3 = _mm256_set1_pd(c3);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_mul_pd(v0, _mm256_loadu_pd(u + i));
        acc = _mm256_fmadd_pd(v1, _mm256_loadu_pd(u + i + 1), acc);
        acc = _mm256_fmadd_pd(v2, _mm256_loadu_pd(u + i + 2), acc);
        acc = _mm256_fmadd_pd(v3, _mm256_loadu_pd(u + i + 3), acc);
        _mm256_storeu_pd(out + i, _mm256_fmadd_pd(_mm256_loadu_pd(scale + i), acc, _mm256_loadu_pd(out + i)));
    }
    for (; i < n; ++i) out[i] += scale[i] * (c0 * u[i] + c1 * u[i + 1] + c2 * u[i + 2] + c3 * u[i + 3]);
}

void affine_step(double* eta, const double* z, double m, double s, std::size_t n) {
    const __m256d vm = _mm256_set1_pd(m), vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(eta + i,
                         _mm256_fmadd_pd(vm, _mm256_loadu_pd(eta + i), _mm256_mul_pd(vs, _mm256_loadu_pd(z + i))));
    for (; i < n; ++i) eta[i] = m * eta[i] + s * z[i];
}

void power_accumulate(const double* eta, double w2, double w3, double* acc2, double* acc3, std::size_t n) {
    const __m256d v2 = _mm256_set1_pd(w2), v3 = _mm256_set1_pd(w3);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d e = _mm256_loadu_pd(eta + i);
        const __m256d e2 = _mm256_mul_pd(e, e);
        _mm256_storeu_pd(acc2 + i, _mm256_fmadd_pd(v2, e2, _mm256_loadu_pd(acc2 + i)));
        _mm256_storeu_pd(acc3 + i, _mm256_fmadd_pd(_mm256_mul_pd(v3, e2), e, _mm256_loadu_pd(acc3 + i)));
    }
    for (; i < n; ++i) {
        const double e2 = eta[i] * eta[i];
        acc2[i] += w2 * e2;
        acc3[i] += w3 * e2 * eta[i];
    }
}

}  // namespace

const Table& avx2_table() {
    static const Table t{"avx2", accumulate_shifted_cubic, affine_step, power_accumulate};
    return t;
}

}  // namespace ldexpand::kernels
