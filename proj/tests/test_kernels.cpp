#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ldexpand/kernels.hpp"

using namespace ldexpand;

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

std::vector<double> randv(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> N(0, 1);
    std::vector<double> v(n);
    for (double& x : v) x = N(rng);
    return v;
}

}  // namespace

TEST_SUITE("kernels") {
    TEST_CASE("active table is a known variant") {
        const auto& a = kernels::active();
        CHECK((&a == &kernels::scalar() || &a == kernels::avx2()));
    }

    TEST_CASE("AVX2 agrees with the scalar reference") {
        const kernels::Table* v = kernels::avx2();
        if (!v) {
            MESSAGE("AVX2 variant unavailable on this machine");
            return;
        }
        const auto& s = kernels::scalar();
        std::mt19937_64 rng(1);
        for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 64u, 1001u}) {
            const auto u = randv(rng, n + 3), sc = randv(rng, n), base = randv(rng, n);
            auto o1 = base, o2 = base;
            s.accumulate_shifted_cubic(o1.data(), u.data(), sc.data(), 0.1, -0.6, 0.7, -0.2, n);
            v->accumulate_shifted_cubic(o2.data(), u.data(), sc.data(), 0.1, -0.6, 0.7, -0.2, n);
            for (std::size_t i = 0; i < n; ++i) CHECK(close(o1[i], o2[i]));

            const auto z = randv(rng, n);
            auto e1 = base, e2 = base;
            s.affine_step(e1.data(), z.data(), 0.99, 0.05, n);
            v->affine_step(e2.data(), z.data(), 0.99, 0.05, n);
            for (std::size_t i = 0; i < n; ++i) CHECK(close(e1[i], e2[i]));

            std::vector<double> a2(n, 0.5), a3(n, -0.5), b2(n, 0.5), b3(n, -0.5);
            s.power_accumulate(base.data(), 0.3, -0.7, a2.data(), a3.data(), n);
            v->power_accumulate(base.data(), 0.3, -0.7, b2.data(), b3.data(), n);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(close(a2[i], b2[i]));
                CHECK(close(a3[i], b3[i]));
            }
        }
    }

    TEST_CASE("scalar reference definitions") {
        const auto& s = kernels::scalar();
        std::vector<double> u{1, 2, 3, 4, 5}, sc{2, 3}, out{1, 1};
        s.accumulate_shifted_cubic(out.data(), u.data(), sc.data(), 1, 0, 0, 1, 2);
        CHECK(out[0] == 1 + 2 * (1 + 4));
        CHECK(out[1] == 1 + 3 * (2 + 5));
        std::vector<double> e{2.0}, z{1.0}, p2{0}, p3{0};
        s.affine_step(e.data(), z.data(), 0.5, 3.0, 1);
        CHECK(e[0] == 4.0);
        s.power_accumulate(e.data(), 1.0, 2.0, p2.data(), p3.data(), 1);
        CHECK(p2[0] == 16.0);
        CHECK(p3[0] == 128.0);
    }
}
