// Acceptance criteria, one pass/fail line each. Usage: acceptance [criterion ...]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ldexpand/cli.hpp"
#include "ldexpand/expansion.hpp"
#include "ldexpand/legendre.hpp"
#include "ldexpand/pide.hpp"

using namespace ldexpand;
namespace fs = std::filesystem;

namespace {

constexpr double kZ95 = 1.959963984540054;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.6g", v);
    return b;
}

ExtremalSolution refined(const FunctionalSpec& F, const ProcessModel& m, std::size_t n, int starts) {
    DirectOptions o;
    o.multistarts = starts;
    return refine_and_extrapolate(
        [&](std::size_t k) {
            DirectOptions p = o;
            p.n = k;
            return maximize_direct(F, m, p);
        },
        n);
}

// prod over Brownian covariance eigenvalues, with the tail in closed form
double karhunen_loeve_oracle() {
    const double pi = std::acos(-1.0);
    const long K = 2000000;
    long double s = 0;
    for (long k = K; k >= 1; --k) s += std::log1p(1.0L / ((k - 0.5L) * (k - 0.5L) * pi * pi));
    s += 1.0L / (pi * pi * K);
    return static_cast<double>(std::exp(-0.5L * s));
}

SweepResult sweep(const char* model, const char* F, const std::vector<double>& eps, std::size_t n,
                  std::size_t k0_n, const ExtremalSolution& sol) {
    SweepOptions so;
    so.eps_grid = eps;
    so.prefactor.n = n;
    so.prefactor.seed = 1;
    so.k0.n = k0_n;
    so.k0.seed = 1;
    return epsilon_sweep(model_preset(model), functional_preset(F), functional_preset("one"), sol, so);
}

void legendre_closed_form(Outcome& o) {
    const auto m = model_preset("example1");
    double worst = 0;
    for (int i = -500; i <= 500; ++i) {
        const double u = 0.01 * i, r = std::sqrt(u * u + 1);
        worst = std::max(worst, std::abs(h0(m, 0, 0, u).value - (u * std::log(u + r) + 1 - r)));
    }
    o.detail << "max |h0 - closed form| = " << fmt(worst);
    o.check(worst <= 1e-10, "tolerance 1e-10");
}

void variational_cross(Outcome& o) {
    const auto m = model_preset("example1");
    const auto F = functional_preset("example1-F");
    const auto direct = refined(F, m, 200, 5);
    const auto shoot = euler_lagrange_shoot(F, m);
    const double diff = std::abs(direct.best_gap() - shoot.gap);
    o.detail << "gap direct " << fmt(direct.best_gap()) << " shooting " << fmt(shoot.gap) << " diff " << fmt(diff)
             << ", starts " << direct.diag.n_converged << "/" << direct.diag.n_starts << " spread "
             << fmt(direct.diag.path_spread);
    o.check(diff < 1e-6, "gap agreement");
    o.check(direct.diag.n_starts == 5 && direct.diag.n_converged == 5, "all starts converged");
    o.check(direct.diag.path_spread < 1e-4, "path spread");
}

void gaussian_linear(Outcome& o) {
    const auto sol = refined(functional_preset("terminal-linear:1"), model_preset("brownian"), 64, 1);
    const auto s = sweep("brownian", "terminal-linear:1", {0.4, 0.2, 0.1}, 100000, 10000, sol);
    for (const auto& r : s.records) {
        const double dev = r.total() - 1.0 / (2 * r.eps);
        const double se = r.prefactor_se / r.prefactor_mean;
        o.detail << "eps " << r.eps << ": " << fmt(dev) << " (" << fmt(dev / se) << " SE); ";
        if (r.eps == 0.4 || r.eps == 0.1) o.check(std::abs(dev) <= 4 * se, "log estimate at eps " + fmt(r.eps));
    }
    const auto& f = s.fit;
    o.detail << "K0_fit " << fmt(f.K0) << " +- " << fmt(kZ95 * f.K0_se) << ", K1_fit " << fmt(f.K1) << " +- "
             << fmt(kZ95 * f.K1_se);
    o.check(std::abs(f.K0 - 1) <= kZ95 * f.K0_se, "K0 interval contains 1");
    o.check(std::abs(f.K1) <= kZ95 * f.K1_se, "K1 interval contains 0");
}

void cameron_martin(Outcome& o) {
    const double oracle = karhunen_loeve_oracle();
    o.check(std::abs(oracle - 1 / std::sqrt(std::cosh(1.0))) < 1e-9, "oracle validation");
    o.detail << "oracle " << fmt(oracle) << "; ";
    const auto sol = refined(functional_preset("quadratic-penalty:1"), model_preset("brownian"), 64, 1);
    const auto s = sweep("brownian", "quadratic-penalty:1", {0.4, 0.2, 0.1, 0.05}, 100000, 100000, sol);
    for (const auto& r : s.records) {
        const double z = (r.prefactor_mean - oracle) / r.prefactor_se;
        o.detail << "eps " << r.eps << ": " << fmt(r.prefactor_mean) << " (" << fmt(z) << " SE); ";
        o.check(std::abs(z) <= 4, "prefactor at eps " + fmt(r.eps));
    }
    const double zk = (s.k0.value - oracle) / s.k0.se;
    o.detail << "K0_mc " << fmt(s.k0.value) << " (" << fmt(zk) << " SE)";
    o.check(std::abs(zk) <= 4, "K0 from the limit diffusion");
}

const SweepResult& example1_sweep(ExtremalSolution& sol_out) {
    static ExtremalSolution sol;
    static SweepResult res;
    static bool done = false;
    if (!done) {
        sol = refined(functional_preset("example1-F"), model_preset("example1"), 200, 5);
        res = sweep("example1", "example1-F", {0.4, 0.2, 0.1, 0.05}, 100000, 100000, sol);
        done = true;
    }
    sol_out = sol;
    return res;
}

void internal_consistency(Outcome& o) {
    ExtremalSolution sol;
    const auto& s = example1_sweep(sol);
    const auto& f = s.fit;
    const double fl = f.K0 - kZ95 * f.K0_se, fh = f.K0 + kZ95 * f.K0_se;
    const double ml = s.k0.value - kZ95 * s.k0.se, mh = s.k0.value + kZ95 * s.k0.se;
    o.detail << "K0_fit [" << fmt(fl) << ", " << fmt(fh) << "] K0_mc [" << fmt(ml) << ", " << fmt(mh) << "]; ";
    o.check(fl <= mh && ml <= fh, "intervals overlap");
    const auto rough = rough_ld_check(s.records, sol.best_gap());
    o.detail << "eps ln(prefactor):";
    for (const auto& r : rough.rows) o.detail << " " << fmt(r.deviation);
    o.check(rough.monotone_in_bands, "deviation shrinks within bands");
}

void tails_and_moments(Outcome& o) {
    ExtremalSolution sol;
    const auto& s = example1_sweep(sol);
    const auto& r = s.records;
    o.detail << "clipped/n:";
    for (const auto& x : r) o.detail << " " << fmt(static_cast<double>(x.n_clipped) / x.n_samples);
    o.detail << "; tail fraction:";
    for (const auto& x : r) o.detail << " " << fmt(x.tail_fraction);
    o.detail << "; E|eta_T|^4:";
    for (const auto& x : r) o.detail << " " << fmt(x.m4[2]);
    for (std::size_t i = 1; i < r.size(); ++i) {
        const double n0 = static_cast<double>(r[i - 1].n_samples), n1 = static_cast<double>(r[i].n_samples);
        const double p0 = r[i - 1].n_clipped / n0, p1 = r[i].n_clipped / n1;
        const double se = std::sqrt(p0 * (1 - p0) / n0 + p1 * (1 - p1) / n1);
        o.check(p1 <= p0 + 2 * se, "clipped fraction at eps " + fmt(r[i].eps));
        o.check(r[i].tail_fraction < r[i - 1].tail_fraction, "tail fraction at eps " + fmt(r[i].eps));
        o.check(r[i].m4[2] <= 3 * r[0].m4[2], "fourth moment at eps " + fmt(r[i].eps));
    }
}

void pide_cross(Outcome& o) {
    const auto m = model_preset("pide-special");
    const Coefficient c = Coefficient::constant(1.0);
    Grid1D g;
    g.eps = 0.5;
    SpecificCaseOptions opt;
    opt.mc.n = 100000;
    const auto rep = specific_case_check(m, c, initial_datum("bump"), g, opt);
    o.detail << "max FD/MC " << fmt(rep.max_rel_fd_mc) << ", factorization " << fmt(rep.max_rel_factorization);
    o.check(rep.max_rel_fd_mc < 0.02, "FD vs MC below 2%");
    o.check(rep.max_rel_factorization < 1e-6, "factorization");
    SpecificCaseOptions one = opt;
    one.mc.n = 1000;
    one.g_is_one = true;
    const auto r1 = specific_case_check(m, c, initial_datum("one"), g, one);
    o.detail << ", g = 1: max |u e^{-t/eps} - 1| " << fmt(r1.max_rel_one);
    o.check(r1.max_rel_one >= 0 && r1.max_rel_one < 1e-9, "g = 1 solution");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

double fd_direction(const FunctionalSpec& F, const PathGrid& b, const PathGrid& d, int order, double h) {
    auto at = [&](double s) {
        PathGrid p = b;
        for (std::size_t i = 0; i < p.phi.size(); ++i) p.phi[i] += s * d.phi[i];
        return eval_functional(F, p);
    };
    switch (order) {
        case 1: return (at(h) - at(-h)) / (2 * h);
        case 2: return (at(h) - 2 * at(0) + at(-h)) / (h * h);
        default: return (at(2 * h) - 2 * at(h) + 2 * at(-h) - at(-2 * h)) / (2 * h * h * h);
    }
}

void property_suites(Outcome& o) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(-5, 5), T01(0, 1);
    // Fenchel-Young on every preset
    long fy = 0;
    for (const auto& name : model_preset_names()) {
        const auto m = model_preset(name);
        for (int i = 0; i < 2500; ++i) {
            const double t = T01(rng), x = U(rng) * 0.4, u = U(rng), z = U(rng);
            if (h0(m, t, x, u).value + cumulant_g0(m, t, x, z) < z * u - 1e-12) ++fy;
        }
    }
    o.detail << "Fenchel-Young violations " << fy;
    o.check(fy == 0, "Fenchel-Young");

    long cv = 0;
    SampleBox box;
    box.x_min = -2, box.x_max = 2, box.z_min = -3, box.z_max = 3;
    for (const auto& name : model_preset_names()) cv += check_assumptions(model_preset(name), box, 21).convexity_violations;
    o.detail << ", convexity violations " << cv;
    o.check(cv == 0, "convexity");

    // pairing against directional differences, per builtin term type
    const FunctionalSpec terms[2] = {FunctionalSpec::integral_expr(Expr::parse("sin(x)*(1+t) + 0.3*x^4")),
                                     FunctionalSpec::terminal_expr(Expr::parse("exp(0.5*x) - x^3"))};
    std::normal_distribution<double> N(0, 1);
    auto rpath = [&] {
        PathGrid p(1.0, 100);
        const double a = N(rng), b = N(rng), c = N(rng);
        for (std::size_t i = 0; i <= 100; ++i) {
            const double t = p.t(i);
            p.phi[i] = a * t + b * std::sin(3 * t) + c * t * t;
        }
        // unit sup norm keeps the effective difference step at h
        double sup = 0;
        for (double v : p.phi) sup = std::max(sup, std::abs(v));
        for (double& v : p.phi) v /= sup;
        return p;
    };
    double worst = 0;
    for (const auto& F : terms)
        for (int k = 0; k < 100; ++k) {
            const PathGrid b = rpath(), d = rpath();
            for (int j = 1; j <= 3; ++j) {
                const double p = derivative_pairing(F, b, j, std::vector<PathGrid>(j, d));
                const double fd = fd_direction(F, b, d, j, 1e-3);
                worst = std::max(worst, std::abs(p - fd) / std::max(std::abs(p), 1e-2));
            }
        }
    o.detail << ", pairing rel err " << fmt(worst);
    o.check(worst < 1e-4, "pairing vs finite differences");

    std::vector<double> grid;
    for (int i = -1000; i <= 1000; ++i) grid.push_back(0.01 * i);
    const double margin = h_inequality_check(grid);
    o.detail << ", H-inequality margin " << fmt(margin);
    o.check(margin >= -1e-12, "H inequality");

    // byte-identical outputs at 1 and 8 workers
    const fs::path base = fs::temp_directory_path() / "ldexpand_acceptance_rerun";
    fs::remove_all(base);
    bool same = true;
    for (const char* w : {"1", "8"}) {
        std::vector<std::string> sweep_args{"ldexpand", "sweep", "--model", "example2", "--eps-list", "0.4,0.2,0.1",
                                            "--samples", "4000", "--k0-samples", "4000", "--seed", "17",
                                            "--grid-n", "50", "--workers", w, "--out", (base / w).string()};
        std::vector<std::string> pide_args{"ldexpand", "pide", "--samples", "2000", "--eps-list", "0.4,0.2,0.1",
                                           "--seed", "17", "--workers", w, "--out", (base / w).string()};
        for (auto* args : {&sweep_args, &pide_args}) {
            std::vector<char*> argv;
            for (auto& a : *args) argv.push_back(a.data());
            std::ostringstream sink;
            auto* old = std::cout.rdbuf(sink.rdbuf());
            const int rc = run_cli(static_cast<int>(argv.size()), argv.data());
            std::cout.rdbuf(old);
            o.check(rc == 0, "rerun exit code");
        }
    }
    int files = 0;
    for (const auto& e : fs::directory_iterator(base / "1")) {
        if (!e.is_regular_file()) continue;
        ++files;
        if (slurp(e.path()) != slurp(base / "8" / e.path().filename())) {
            same = false;
            o.detail << " (differs: " << e.path().filename().string() << ")";
        }
    }
    o.detail << ", reruns identical over " << files << " files";
    o.check(same && files > 0, "byte-identical reruns");
}

const std::vector<std::pair<const char*, std::function<void(Outcome&)>>>& criteria() {
    static const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> c{
        {"Legendre closed form", legendre_closed_form},
        {"variational cross-validation", variational_cross},
        {"Gaussian oracle, linear F", gaussian_linear},
        {"Cameron-Martin oracle, quadratic F", cameron_martin},
        {"expansion consistency, example1", internal_consistency},
        {"tail and moment diagnostics", tails_and_moments},
        {"PIDE cross-validation", pide_cross},
        {"property suites", property_suites},
    };
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty())
        for (int i = 1; i <= 8; ++i) which.push_back(i);
    int failed = 0;
    for (int k : which) {
        if (k < 1 || k > 8) {
            std::cerr << "unknown criterion " << k << '\n';
            return 2;
        }
        const auto& [name, fn] = criteria()[static_cast<std::size_t>(k - 1)];
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "criterion " << k << " (" << name << "): " << (o.pass ? "PASS" : "FAIL") << " - "
                  << o.detail.str() << " [" << fmt(secs) << " s]" << std::endl;
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
