#include <doctest.h>

#include <cmath>

#include "ldexpand/expr.hpp"
#include "ldexpand/model.hpp"

using namespace ldexpand;

TEST_SUITE("expr") {
    TEST_CASE("evaluation and precedence") {
        CHECK(Expr::parse("1 + 2*3")(0, 0) == 7.0);
        CHECK(Expr::parse("2^3^2")(0, 0) == 512.0);
        CHECK(Expr::parse("-x^2")(0, 3) == -9.0);
        CHECK(Expr::parse("sin(pi/2) + t*x + u")(2, 3, 4) == doctest::Approx(11.0));
        CHECK(Expr::parse("sqrt(x) * ln(exp(2))")(0, 4) == doctest::Approx(4.0));
    }

    TEST_CASE("symbolic derivatives against central differences") {
        const Expr e = Expr::parse("sin(x)*exp(-x^2/2) + cosh(t*x)");
        const Expr d = e.derivative(Expr::Var::X);
        for (double x : {-1.3, 0.0, 0.4, 2.1}) {
            const double h = 1e-5;
            const double fd = (e(0.7, x + h) - e(0.7, x - h)) / (2 * h);
            CHECK(d(0.7, x) == doctest::Approx(fd).epsilon(1e-8));
        }
        CHECK_FALSE(Expr::parse("x*2").derivative(Expr::Var::T).depends_on(Expr::Var::X));
    }

    TEST_CASE("syntax errors") {
        CHECK_THROWS_AS(Expr::parse("1 +"), Error);
        CHECK_THROWS_AS(Expr::parse("foo(x)"), Error);
        CHECK_THROWS_AS(Expr::parse("(x"), Error);
    }
}

TEST_SUITE("model") {
    TEST_CASE("example1 cumulant and derivatives") {
        const auto m = model_preset("example1");
        G0Partials p = g0_partials(m, 0.0, 0.0, 0.0);
        CHECK(p.dz == 0.0);
        CHECK(p.dzz == doctest::Approx(1.0));
        for (double z : {-2.0, -0.3, 0.5, 3.0}) {
            CHECK(cumulant_g0(m, 0.2, 0.1, z) == doctest::Approx(std::cosh(z) - 1.0).epsilon(1e-14));
            CHECK(g0_mixed(m, 0.2, 0.1, z, 1, 0) == doctest::Approx(std::sinh(z)).epsilon(1e-14));
            CHECK(g0_mixed(m, 0.2, 0.1, z, 3, 0) == doctest::Approx(std::sinh(z)).epsilon(1e-14));
        }
        CHECK(cumulant_geps(m, 0, 0, 2.0, 0.1) == doctest::Approx((std::cosh(0.2) - 1.0) / 0.1));
    }

    TEST_CASE("example2 mixed partial by hand") {
        const auto m = model_preset("example2");
        for (double x : {-1.0, 0.0, 0.8}) {
            CHECK(g0_mixed(m, 0, x, 0.0, 1, 1) == doctest::Approx(0.0));
            // d/dz d/dx of (sin x + 2)(e^z + e^-z - 2)
            const double z = 0.7;
            CHECK(g0_mixed(m, 0, x, z, 1, 1) == doctest::Approx(std::cos(x) * (std::exp(z) - std::exp(-z))));
            CHECK(g0_mixed(m, 0, x, z, 0, 2) ==
                  doctest::Approx(-std::sin(x) * (std::exp(z) + std::exp(-z) - 2)).epsilon(1e-12));
        }
    }

    TEST_CASE("brownian has no x-derivatives") {
        const auto m = model_preset("brownian");
        G0Partials p = g0_partials(m, 0.5, 1.5, 0.7, 3);
        for (double v : p.dx) CHECK(v == 0.0);
        CHECK(p.dzx == 0.0);
        CHECK(cumulant_g0(m, 0, 0, 3.0) == doctest::Approx(4.5));
    }

    TEST_CASE("tilted moments by atom sums") {
        const auto m = model_preset("example1");
        auto t2 = tilted_moments(m, 0, 0, 0.0, 2);
        CHECK(t2.alpha == doctest::Approx(1.0));
        auto t3 = tilted_moments(m, 0, 0, 0.0, 3);
        CHECK(t3.alpha == doctest::Approx(0.0));
        CHECK(t3.beta == doctest::Approx(1.0));
        auto t3c = tilted_moments(m, 0, 0, 0.5, 3);
        CHECK(t3c.alpha == doctest::Approx(std::sinh(0.5)));
        ProcessModel none = model_preset("brownian");
        for (int j = 3; j <= 5; ++j) {
            CHECK(tilted_moments(none, 0, 0, 0.3, j).alpha == 0.0);
            CHECK(tilted_moments(none, 0, 0, 0.3, j).beta == 0.0);
        }
    }

    TEST_CASE("assumption scan") {
        SampleBox box;
        box.x_min = -2, box.x_max = 2, box.z_min = -3, box.z_max = 3;
        auto r = check_assumptions(model_preset("example1"), box, 13);
        CHECK(r.convexity_violations == 0);
        CHECK(r.min_dzz == doctest::Approx(1.0));
        auto b = check_assumptions(model_preset("brownian"), box, 9);
        CHECK(b.min_dzz == doctest::Approx(1.0));
        CHECK(b.max_abs_dzx == 0.0);
        auto e2 = check_assumptions(model_preset("example2"), box, 9);
        CHECK(std::isfinite(e2.max_abs_dzx));
        CHECK(e2.max_abs_dzx > 0.0);
    }

    TEST_CASE("derivative order beyond smoothness") {
        auto c = Coefficient::function([](double, double x) { return x * x; }, {}, false, true, 2);
        CHECK(c.dx(2, 0, 1.0) == doctest::Approx(2.0).epsilon(1e-4));
        try {
            c.dx(3, 0, 1.0);
            FAIL("expected UnsupportedOrder");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::UnsupportedOrder);
        }
    }

    TEST_CASE("density measure matches closed form") {
        // pide-special jumps: u^2 on [-1,1], so int (e^{zu}-1-zu) u^2 du
        const auto m = model_preset("pide-special");
        const double z = 1.3;
        auto prim = [&](double u) {  // antiderivative of u^2 e^{zu}
            return std::exp(z * u) * (u * u / z - 2 * u / (z * z) + 2 / (z * z * z));
        };
        const double jump = prim(1) - prim(-1) - 2.0 / 3.0;
        const double expect = 0.2 * std::sin(0.4) * z + 0.5 * z * z + jump;
        CHECK(cumulant_g0(m, 0, 0.4, z) == doctest::Approx(expect).epsilon(1e-13));
    }

    TEST_CASE("unknown preset") { CHECK_THROWS_AS(model_preset("nope"), Error); }
}
