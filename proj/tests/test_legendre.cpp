#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ldexpand/legendre.hpp"

using namespace ldexpand;

namespace {

// Dense grid plus golden refinement of z u - g(z); independent of the Newton solver.
double grid_sup(const std::function<double(double)>& g, double u, double& zstar) {
    double best = -1e300;
    for (int i = 0; i <= 40000; ++i) {
        const double z = -10.0 + 20.0 * i / 40000.0;
        const double v = z * u - g(z);
        if (v > best) best = v, zstar = z;
    }
    double a = zstar - 1e-3, b = zstar + 1e-3;
    const double r = (std::sqrt(5.0) - 1) / 2;
    for (int k = 0; k < 200; ++k) {
        const double c = b - r * (b - a), d = a + r * (b - a);
        if (c * u - g(c) > d * u - g(d)) b = d; else a = c;
    }
    zstar = 0.5 * (a + b);
    return zstar * u - g(zstar);
}

double closed_h0(double u) { return u * std::log(u + std::sqrt(u * u + 1)) + 1 - std::sqrt(u * u + 1); }

}  // namespace

TEST_SUITE("legendre") {
    TEST_CASE("cosh - 1 at u = 1") {
        ConvexFunction g{[](double z) { return std::cosh(z) - 1; },
                         [](double z, double& d1, double& d2) { d1 = std::sinh(z), d2 = std::cosh(z); }};
        auto r = legendre_sup(g, 1.0);
        double zs = 0;
        const double oracle = grid_sup(g.value, 1.0, zs);
        CHECK(r.converged);
        CHECK(r.value == doctest::Approx(oracle).epsilon(1e-10));
        CHECK(r.value == doctest::Approx(0.467160).epsilon(1e-6));
        CHECK(r.argmax_z == doctest::Approx(0.881374).epsilon(1e-6));
        CHECK(r.argmax_z == doctest::Approx(zs).epsilon(1e-6));
    }

    TEST_CASE("self-dual quadratic and zero slope") {
        ConvexFunction q{[](double z) { return 0.5 * z * z; }, [](double z, double& d1, double& d2) { d1 = z, d2 = 1; }};
        auto r = legendre_sup(q, 2.0);
        CHECK(r.value == doctest::Approx(2.0));
        CHECK(r.argmax_z == doctest::Approx(2.0));
        auto r0 = legendre_sup(q, 0.0);
        CHECK(r0.value == doctest::Approx(0.0));
        CHECK(r0.argmax_z == doctest::Approx(0.0));
    }

    TEST_CASE("non-convex and unbounded inputs") {
        ConvexFunction bad{[](double z) { return -z * z; }, [](double z, double& d1, double& d2) { d1 = -2 * z, d2 = -2; }};
        CHECK_THROWS_AS(legendre_sup(bad, 1.0), Error);
        // linear g: sup_z z(u - 1) is infinite for u != 1
        ConvexFunction lin{[](double z) { return z; }, [](double, double& d1, double& d2) { d1 = 1, d2 = 0; }};
        CHECK_THROWS_AS(legendre_sup(lin, 2.0), Error);
    }

    TEST_CASE("h0 of the presets") {
        const auto e1 = model_preset("example1");
        CHECK(h0(e1, 0, 0, 0.0).value == doctest::Approx(0.0));
        CHECK(h0(e1, 0, 0, -1.0).value == doctest::Approx(0.467160).epsilon(1e-6));
        CHECK(dh0_du(e1, 0, 0, 0.0) == doctest::Approx(0.0));
        CHECK(dh0_du(e1, 0, 0, 1.0) == doctest::Approx(std::asinh(1.0)).epsilon(1e-12));
        const auto br = model_preset("brownian");
        for (double u : {-3.0, 0.5, 2.0}) {
            CHECK(h0(br, 0, 0, u).value == doctest::Approx(0.5 * u * u));
            CHECK(dh0_du(br, 0, 0, u) == doctest::Approx(u));
        }
    }

    TEST_CASE("closed form on a dense grid") {
        const auto e1 = model_preset("example1");
        double worst = 0;
        for (int i = -500; i <= 500; ++i) {
            const double u = 0.01 * i;
            worst = std::max(worst, std::abs(h0(e1, 0, 0, u).value - closed_h0(u)));
        }
        CHECK(worst < 1e-10);
    }

    TEST_CASE("Fenchel-Young, envelope and monotone argmax") {
        const auto e1 = model_preset("example1");
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> U(-4, 4);
        long violations = 0;
        for (int i = 0; i < 2000; ++i) {
            const double u = U(rng), z = U(rng);
            const double lhs = h0(e1, 0, 0, u).value + cumulant_g0(e1, 0, 0, z);
            if (lhs < z * u - 1e-12) ++violations;
        }
        CHECK(violations == 0);
        double prev = -1e300;
        for (double u = -3; u <= 3; u += 0.25) {
            const double zs = dh0_du(e1, 0, 0, u);
            CHECK(zs > prev);
            prev = zs;
            const double d = 1e-5;
            const double fd = (h0(e1, 0, 0, u + d).value - h0(e1, 0, 0, u - d).value) / (2 * d);
            CHECK(zs == doctest::Approx(fd).epsilon(1e-7));
        }
    }

    TEST_CASE("H inequality margins") {
        CHECK(h_inequality_check({0.0}) == doctest::Approx(std::sqrt(2.0) - 1));
        const double r2 = std::sqrt(2.0);
        const double rhs1 = std::log(1 + r2) + 1 - 2 * r2;
        CHECK(h_inequality_check({1.0}) == doctest::Approx(std::asinh(1.0) + 1 - r2 - rhs1).epsilon(1e-12));
        CHECK(h_inequality_check({1.0}) > 0.0);
        std::vector<double> grid;
        for (int i = -1000; i <= 1000; ++i) grid.push_back(0.01 * i);
        CHECK(h_inequality_check(grid) >= 0.0);
    }
}
