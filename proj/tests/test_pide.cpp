#include <doctest.h>

#include <cmath>

#include "ldexpand/pide.hpp"

using namespace ldexpand;

namespace {

double heat(double t, double x) { return std::exp(-x * x / (2 * (1 + t))) / std::sqrt(1 + t); }

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::NotApplicable;
}

}  // namespace

TEST_SUITE("pide") {
    TEST_CASE("initial data") {
        CHECK(initial_datum("one")(3.0) == 1.0);
        CHECK(initial_datum("bump")(1.0) == doctest::Approx(std::exp(-0.5)));
        CHECK(initial_datum("x^2 + 1")(2.0) == doctest::Approx(5.0));
        CHECK_THROWS_AS(initial_datum("t*x"), Error);
    }

    TEST_CASE("heat kernel") {
        Grid1D g;
        g.eps = 1.0;
        g.t_end = 0.1;
        const auto sol = solve_fd(model_preset("brownian"), Coefficient(), initial_datum("bump"), g);
        const std::size_t k = sol.snapshot(0.1);
        double err = 0;
        for (std::size_t i = 0; i < sol.x.size(); ++i) err = std::max(err, std::abs(sol.u[k][i] - heat(0.1, sol.x[i])));
        CHECK(err < 1e-3);
        CHECK(sol.value(k, 0.123) == doctest::Approx(heat(0.1, 0.123)).epsilon(1e-3));
    }

    TEST_CASE("grid convergence") {
        auto err = [](std::size_t nx) {
            Grid1D g;
            g.eps = 1.0;
            g.t_end = 0.2;
            g.nx = nx;
            g.nt = 400;
            const auto sol = solve_fd(model_preset("brownian"), Coefficient(), initial_datum("bump"), g);
            return std::abs(sol.value(sol.snapshot(0.2), 0.0) - heat(0.2, 0.0));
        };
        const double e1 = err(101), e2 = err(201);
        CHECK(e2 < e1);
    }

    TEST_CASE("constant reaction gives the exponential factor") {
        Grid1D g;
        g.eps = 0.5;
        g.t_end = 0.5;
        const auto m = model_preset("pide-special");
        const auto sol = solve_fd(m, Coefficient::constant(1.0), initial_datum("one"), g);
        const std::size_t k = sol.snapshot(0.5);
        double worst = 0;
        for (double v : sol.u[k]) worst = std::max(worst, std::abs(v * std::exp(-1.0) - 1));
        CHECK(worst < 1e-10);
    }

    TEST_CASE("probe comparison at a coarse sample size") {
        Grid1D g;
        SpecificCaseOptions o;
        o.mc.n = 4000;
        const auto rep = specific_case_check(model_preset("pide-special"), Coefficient::constant(1.0),
                                             initial_datum("bump"), g, o);
        CHECK(rep.rows.size() == 9);
        CHECK(rep.max_rel_factorization < 1e-6);
        CHECK(rep.scaled_bounded);
        for (const auto& r : rep.rows) CHECK(std::abs(r.u_fd - r.u_mc) <= 4 * r.u_mc_se + 0.01 * r.u_fd);
    }

    TEST_CASE("Feynman-Kac for pure drift is exact") {
        ProcessModel m;
        m.alpha = Coefficient::constant(0.5);
        FkOptions o;
        o.n = 10;
        const auto r = feynman_kac_mc(m, initial_datum("x"), Coefficient::constant(0.2), 0.4, 1.0, 1.0, o);
        CHECK(r.mean == doctest::Approx(1.5 * std::exp(0.5)).epsilon(1e-12));
    }

    TEST_CASE("failure modes") {
        Grid1D narrow;
        narrow.x_min = -1.5;
        narrow.x_max = 1.5;
        narrow.nx = 61;
        CHECK(code_of([&] { solve_fd(model_preset("pide-special"), Coefficient::constant(1.0), initial_datum("bump"), narrow); }) ==
              Errc::BoundaryLeak);
        Grid1D g;
        FdOptions tight;
        tight.nt_ceiling = 10;
        CHECK(code_of([&] { solve_fd(model_preset("pide-special"), Coefficient::constant(1.0), initial_datum("bump"), g, tight); }) ==
              Errc::StabilityViolation);
        CHECK(code_of([&] { asymptotic_compare(model_preset("pide-special"), Coefficient::constant(1.0), initial_datum("bump"), g, {0.4, 0.2}, default_probes()); }) ==
              Errc::FitIllConditioned);
        ProcessModel neg;
        neg.a = Coefficient::constant(-1.0);
        CHECK_THROWS_AS(solve_fd(neg, Coefficient(), initial_datum("bump"), g), Error);
    }

    TEST_CASE("asymptotic fit") {
        Grid1D g;
        const auto rep = asymptotic_compare(model_preset("pide-special"), Coefficient::constant(1.0),
                                            initial_datum("bump"), g, {0.4, 0.2, 0.1}, default_probes());
        CHECK(rep.fits.size() == 9);
        for (const auto& f : rep.fits) {
            CHECK(f.k0_lo <= f.k0);
            CHECK(f.k0 <= f.k0_hi);
            CHECK(std::isfinite(f.k1));
            CHECK(f.flow_limit > 0.0);
        }
    }
}
