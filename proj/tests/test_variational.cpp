#include <doctest.h>

#include <cmath>

#include "ldexpand/variational.hpp"

using namespace ldexpand;

namespace {

PathGrid make_path(std::size_t n, const std::function<double(double)>& f) {
    PathGrid p(1.0, n);
    for (std::size_t i = 0; i <= n; ++i) p.phi[i] = f(p.t(i));
    return p;
}

DirectOptions quick(std::size_t n, int starts = 2) {
    DirectOptions o;
    o.n = n;
    o.multistarts = starts;
    return o;
}

}  // namespace

TEST_SUITE("variational") {
    TEST_CASE("action values") {
        const auto e1 = model_preset("example1"), br = model_preset("brownian");
        CHECK(action_s(e1, PathGrid(1.0, 50)).value == 0.0);
        CHECK(action_s(br, make_path(50, [](double t) { return 1.5 * t; })).value == doctest::Approx(1.125));
        CHECK(action_s(e1, make_path(50, [](double t) { return t; })).value ==
              doctest::Approx(std::asinh(1.0) + 1 - std::sqrt(2.0)).epsilon(1e-12));
    }

    TEST_CASE("brownian with a terminal linear functional") {
        const auto sol = maximize_direct(functional_preset("terminal-linear:1"), model_preset("brownian"), quick(64));
        CHECK(sol.gap == doctest::Approx(0.5).epsilon(1e-10));
        for (std::size_t i = 0; i <= sol.phi0.n(); ++i) CHECK(sol.phi0.phi[i] == doctest::Approx(sol.phi0.t(i)).epsilon(1e-8));
        for (double z : sol.z0) CHECK(z == doctest::Approx(1.0).epsilon(1e-8));
    }

    TEST_CASE("brownian with a linear integrand") {
        // F = lam int phi: phi0 = lam (t - t^2/2), gap = lam^2 / 6
        const double lam = 1.5;
        auto F = FunctionalSpec::integral_expr(Expr::parse("1.5*x"));
        const auto sol = maximize_direct(F, model_preset("brownian"), quick(200));
        CHECK(sol.gap == doctest::Approx(lam * lam / 6).epsilon(1e-4));
        const auto sh = euler_lagrange_shoot(F, model_preset("brownian"));
        CHECK(sh.gap == doctest::Approx(lam * lam / 6).epsilon(1e-9));
        CHECK(sh.phi0(0.5) == doctest::Approx(lam * (0.5 - 0.125)).epsilon(1e-8));
    }

    TEST_CASE("zero functional") {
        const auto sol = maximize_direct(functional_preset("zero"), model_preset("example1"), quick(50));
        CHECK(sol.gap == doctest::Approx(0.0));
        for (double v : sol.phi0.phi) CHECK(std::abs(v) < 1e-8);
        const auto z = extract_z0(model_preset("example1"), PathGrid(1.0, 20));
        for (double v : z) CHECK(v == 0.0);
    }

    TEST_CASE("example1 extremal shape and shooting agreement") {
        const auto m = model_preset("example1");
        const auto F = functional_preset("example1-F");
        const auto sol = maximize_direct(F, m, quick(200, 3));
        CHECK(sol.gap > 0.0);
        const auto& p = sol.phi0.phi;
        for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i] >= p[i - 1]);
        for (std::size_t i = 1; i + 1 < p.size(); ++i) CHECK(p[i + 1] - 2 * p[i] + p[i - 1] <= 1e-12);
        CHECK(sol.diag.z0_terminal == doctest::Approx(0.0).epsilon(1e-6));
        const auto sh = euler_lagrange_shoot(F, m);
        CHECK(std::abs(sh.gap - sol.gap) < 1e-4);
        CHECK(sup_distance(sh.phi0.resampled(200), sol.phi0) < 1e-3);
    }

    TEST_CASE("Richardson refinement") {
        const auto m = model_preset("example1");
        const auto F = functional_preset("example1-F");
        auto sol = refine_and_extrapolate([&](std::size_t n) { return maximize_direct(F, m, quick(n, 1)); }, 100);
        REQUIRE(sol.refinement);
        CHECK(sol.refinement->order == doctest::Approx(2.0).epsilon(0.1));
        const auto sh = euler_lagrange_shoot(F, m);
        CHECK(std::abs(sol.refinement->gap_extrapolated - sh.gap) < 1e-6);

        auto lin = refine_and_extrapolate(
            [&](std::size_t n) { return maximize_direct(functional_preset("terminal-linear:1"), model_preset("brownian"), quick(n, 1)); },
            16);
        CHECK(std::abs(lin.refinement->gaps[0] - lin.refinement->gaps[2]) < 1e-12);
        CHECK(lin.refinement->gap_extrapolated == doctest::Approx(0.5));

        auto flat = richardson({10, 20, 40}, {0.25, 0.25, 0.25}, {0, 0, 0});
        CHECK(flat.gap_extrapolated == 0.25);
    }
}
