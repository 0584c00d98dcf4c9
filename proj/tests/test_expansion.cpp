#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "ldexpand/expansion.hpp"

using namespace ldexpand;

namespace {

ExtremalSolution solve(const char* F, const char* model, std::size_t n = 64) {
    DirectOptions o;
    o.n = n;
    o.multistarts = 1;
    return maximize_direct(functional_preset(F), model_preset(model), o);
}

PrefactorOptions popt(std::size_t n, std::uint64_t seed = 1) {
    PrefactorOptions p;
    p.n = n;
    p.seed = seed;
    return p;
}

// prod_k (1 + 1/((k - 1/2)^2 pi^2))^{-1/2} over the Brownian covariance eigenvalues,
// with the tail sum of log(1 + x) ~ x integrated in closed form.
double karhunen_loeve_oracle() {
    const double pi = std::acos(-1.0);
    const long K = 2000000;
    long double s = 0;
    for (long k = K; k >= 1; --k) {
        const long double mu = 1.0L / ((k - 0.5L) * (k - 0.5L) * pi * pi);
        s += std::log1p(mu);
    }
    s += 1.0L / (pi * pi * K);
    return static_cast<double>(std::exp(-0.5L * s));
}

EstimateRecord rec(double eps, double mean, double se) {
    EstimateRecord r;
    r.eps = eps;
    r.prefactor_mean = mean;
    r.prefactor_se = se;
    return r;
}

}  // namespace

TEST_SUITE("expansion") {
    TEST_CASE("oracle value for the quadratic penalty") {
        const double kl = karhunen_loeve_oracle();
        CHECK(kl == doctest::Approx(1.0 / std::sqrt(std::cosh(1.0))).epsilon(1e-9));
        CHECK(kl == doctest::Approx(0.80502).epsilon(1e-5));
    }

    TEST_CASE("exact Gaussian moment generating function") {
        const auto sol = solve("terminal-linear:1", "brownian");
        const auto r = estimate_prefactor(model_preset("brownian"), functional_preset("terminal-linear:1"),
                                          functional_preset("one"), sol, 0.1, popt(20000));
        CHECK(r.log_leading == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(std::abs(r.prefactor_mean - 1.0) <= 4 * r.prefactor_se + 1e-9);
        CHECK(r.n_clipped == 0);
        const auto z = estimate_prefactor(model_preset("brownian"), functional_preset("terminal-linear:1"),
                                          functional_preset("zero"), sol, 0.1, popt(2000));
        CHECK(z.prefactor_mean == 0.0);
    }

    TEST_CASE("Cameron-Martin prefactor and K0") {
        const auto sol = solve("quadratic-penalty:1", "brownian");
        const auto m = model_preset("brownian");
        const auto F = functional_preset("quadratic-penalty:1");
        const double oracle = karhunen_loeve_oracle();
        for (double eps : {0.4, 0.1}) {
            const auto r = estimate_prefactor(m, F, functional_preset("one"), sol, eps, popt(20000, 3));
            CHECK(std::abs(r.prefactor_mean - oracle) <= 4 * r.prefactor_se);
        }
        K0Options ko;
        ko.n = 20000;
        const auto k = estimate_k0(F, functional_preset("one"), m, sol, ko);
        CHECK(std::abs(k.value - oracle) <= 4 * k.se);
        const auto k_zero = estimate_k0(F, functional_preset("terminal-linear:1"), m, sol, ko);
        CHECK(k_zero.value == 0.0);
    }

    TEST_CASE("K0 for a linear functional is H at the extremal") {
        const auto sol = solve("terminal-linear:1", "brownian");
        K0Options ko;
        ko.n = 1000;
        auto H = functional_preset("one");
        H.constant = 2.5;
        const auto k = estimate_k0(functional_preset("terminal-linear:1"), H, model_preset("brownian"), sol, ko);
        CHECK(k.value == doctest::Approx(2.5).epsilon(1e-14));
    }

    TEST_CASE("identity estimator is unbiased") {
        for (const char* model : {"example1", "brownian", "example2"}) {
            const auto sol = solve("zero", model, 32);
            for (double eps : {0.4, 0.1}) {
                // no localization: the check is about the weights, not the excluded tail mass
                auto p = popt(2000);
                p.h = std::numeric_limits<double>::infinity();
                const auto r = estimate_prefactor(model_preset(model), functional_preset("zero"),
                                                  functional_preset("one"), sol, eps, p);
                CHECK(std::abs(r.total()) <= 4 * r.prefactor_se / r.prefactor_mean + 1e-12);
            }
        }
    }

    TEST_CASE("localization radius sensitivity") {
        const auto sol = solve("example1-F", "example1", 100);
        auto p = popt(10000, 5);
        const auto m = model_preset("example1");
        const auto F = functional_preset("example1-F");
        const auto a = estimate_prefactor(m, F, functional_preset("one"), sol, 0.2, p);
        p.h = 6.0;
        const auto b = estimate_prefactor(m, F, functional_preset("one"), sol, 0.2, p);
        CHECK(std::abs(a.prefactor_mean - b.prefactor_mean) <= 2 * std::hypot(a.prefactor_se, b.prefactor_se));
        CHECK(b.n_clipped <= a.n_clipped);
    }

    TEST_CASE("coefficient fit") {
        // exact data on K0 + K1 sqrt(eps)
        std::vector<EstimateRecord> rs;
        for (double e : {0.4, 0.2, 0.1}) rs.push_back(rec(e, 0.7 + 0.3 * std::sqrt(e), 1e-3));
        const auto f = fit_coefficients(rs);
        CHECK(f.n_terms == 2);
        CHECK(f.K0 == doctest::Approx(0.7).epsilon(1e-10));
        CHECK(f.K1 == doctest::Approx(0.3).epsilon(1e-9));
        CHECK(f.chi2 < 1e-12);
        // with a known SE the intercept variance follows from the 2x2 normal equations
        double s0 = 0, s1 = 0, s2 = 0;
        for (double e : {0.4, 0.2, 0.1}) s0 += 1e6, s1 += 1e6 * std::sqrt(e), s2 += 1e6 * e;
        CHECK(f.K0_se == doctest::Approx(std::sqrt(s2 / (s0 * s2 - s1 * s1))).epsilon(1e-8));
        rs.push_back(rec(0.05, 0.7 + 0.3 * std::sqrt(0.05) + 0.1 * 0.05, 1e-3));
        rs[0].prefactor_mean += 0.1 * 0.4, rs[1].prefactor_mean += 0.1 * 0.2, rs[2].prefactor_mean += 0.1 * 0.1;
        const auto g = fit_coefficients(rs);
        CHECK(g.n_terms == 3);
        CHECK(g.K2 == doctest::Approx(0.1).epsilon(1e-7));
        std::vector<EstimateRecord> bad{rec(0.1, 1, 0.1), rec(0.1, 1, 0.1), rec(0.1, 1, 0.1)};
        try {
            fit_coefficients(bad);
            FAIL("expected FitIllConditioned");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::FitIllConditioned);
        }
    }

    TEST_CASE("sweep on the linear Gaussian case") {
        const auto sol = solve("terminal-linear:1", "brownian");
        SweepOptions so;
        so.eps_grid = {0.4, 0.2, 0.1};
        so.prefactor = popt(5000);
        so.k0.n = 1000;
        const auto s = epsilon_sweep(model_preset("brownian"), functional_preset("terminal-linear:1"),
                                     functional_preset("one"), sol, so);
        CHECK(std::abs(s.fit.K0 - 1.0) <= 1.96 * s.fit.K0_se + 1e-9);
        CHECK(std::abs(s.fit.K1) <= 1.96 * s.fit.K1_se + 1e-9);
        const auto rough = rough_ld_check(s.records, sol.gap);
        for (const auto& row : rough.rows) CHECK(std::abs(row.deviation) <= 4 * row.se + 1e-9);
        so.eps_grid = {0.4, 0.1};
        CHECK_THROWS_AS(epsilon_sweep(model_preset("brownian"), functional_preset("terminal-linear:1"),
                                      functional_preset("one"), sol, so),
                        Error);
    }

    TEST_CASE("rough LD on F = 0") {
        std::vector<EstimateRecord> rs{rec(0.4, 1.0, 0.0), rec(0.1, 1.0, 0.0)};
        const auto r = rough_ld_check(rs, 0.0);
        CHECK(r.rows[0].deviation == 0.0);
        CHECK(r.rows[1].eps_log_total == 0.0);
        CHECK(r.shrinks);
    }

    TEST_CASE("tail probability") {
        const auto sol = solve("example1-F", "example1", 100);
        const auto m = model_preset("example1");
        CHECK(tail_probability(m, sol, 0.2, 10, 1, 0.0).fraction == 1.0);
        CHECK(tail_probability(m, sol, 0.2, 10, 1, std::numeric_limits<double>::infinity()).fraction == 0.0);
        const auto a = tail_probability(m, sol, 0.4, 5000, 2);
        const auto b = tail_probability(m, sol, 0.1, 5000, 3);
        CHECK(b.fraction <= a.fraction + 2 * std::hypot(a.se, b.se));
    }

    TEST_CASE("Gaussian moments") {
        const auto sol = solve("zero", "brownian", 32);
        const auto m = model_preset("brownian");
        const auto t2 = moment_check(m, sol, 2, {0.3}, 20000, 4);
        CHECK(t2.rows[2].t == 1.0);
        CHECK(std::abs(t2.rows[2].moment - 1.0) < 0.05);
        const auto t4 = moment_check(m, sol, 4, {0.3}, 20000, 4);
        CHECK(std::abs(t4.rows[2].moment - 3.0) < 0.3);
        CHECK(t4.rows[0].moment == doctest::Approx(3.0 / 16).epsilon(0.1));
        const auto t0 = moment_check(m, sol, 0, {0.3, 0.1}, 10, 4);
        for (const auto& r : t0.rows) CHECK(r.moment == 1.0);
        CHECK_THROWS_AS(moment_check(m, sol, 3, {0.3}, 10, 4), Error);
    }

    TEST_CASE("integrating-factor transform") {
        SamplePath p;
        for (int k = 0; k <= 20; ++k) p.push(k / 20.0, 1.0 + k);
        const auto id = tilde_eta_transform(p, [](double) { return 0.0; });
        CHECK(id.values == p.values);
        const auto sc = tilde_eta_transform(p, [](double) { return 0.8; });
        CHECK(sc.terminal() == doctest::Approx(21.0 * std::exp(-0.8)).epsilon(1e-13));

        // OU: e^{t} eta_t is a martingale, so increments of the transform have mean zero
        LimitConfig lc;
        lc.steps = 100;
        const int n = 20000;
        std::vector<double> inc[4];
        const double tt[4] = {0.25, 0.5, 0.75, 1.0};
        for (int i = 0; i < n; ++i) {
            const auto e = simulate_limit_eta([](double) { return 2.0; }, [](double) { return -1.0; }, lc, 1.0, i);
            const auto w = tilde_eta_transform(e, [](double) { return -1.0; });
            for (int j = 0; j < 4; ++j) inc[j].push_back(value_at(w, tt[j]) - 1.0);
        }
        for (auto& v : inc) {
            double m = 0, s = 0;
            for (double x : v) m += x;
            m /= n;
            for (double x : v) s += (x - m) * (x - m);
            CHECK(std::abs(m) < 3 * std::sqrt(s / (n - 1) / n));
        }
    }

    TEST_CASE("seed derivation") {
        CHECK(derive_seed(1, 0) != derive_seed(1, 1));
        CHECK(derive_seed(1, 0) != derive_seed(2, 0));
        CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    }
}
