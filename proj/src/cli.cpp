#include "ldexpand/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ldexpand/expansion.hpp"
#include "ldexpand/pide.hpp"

namespace ldexpand {

namespace fs = std::filesystem;

namespace {

constexpr double kZ95 = 1.959963984540054;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv {
public:
    Csv(const fs::path& file, std::initializer_list<const char*> header) : out_(file), width_(header.size()) {
        if (!out_) fail(Errc::InvalidArgument, "cannot write " + file.string());
        bool first = true;
        for (const char* h : header) {
            out_ << (first ? "" : ",") << h;
            first = false;
        }
        out_ << '\n';
    }
    void row(std::initializer_list<double> values) {
        require(values.size() == width_, "CSV row width mismatch");
        bool first = true;
        for (double v : values) {
            out_ << (first ? "" : ",") << num(v);
            first = false;
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::size_t width_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        fail(Errc::MissingArtifacts, "column '" + name + "' missing");
    }
    double at(std::size_t r, const std::string& name) const { return rows.at(r).at(col(name)); }
};

Table read_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) fail(Errc::MissingArtifacts, "missing artifact " + file.string());
    Table t;
    std::string line, cell;
    if (!std::getline(in, line)) fail(Errc::MissingArtifacts, "empty artifact " + file.string());
    std::stringstream hs(line);
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<double> r;
        while (std::getline(ls, cell, ',')) r.push_back(std::strtod(cell.c_str(), nullptr));
        if (r.size() != t.header.size()) fail(Errc::MissingArtifacts, "malformed row in " + file.string());
        t.rows.push_back(std::move(r));
    }
    return t;
}

fs::path out_dir(const RunConfig& cfg) {
    fs::path p(cfg.out);
    fs::create_directories(p);
    return p;
}

void write_extremal(const fs::path& dir, const ExtremalSolution& sol, double shoot_gap, std::size_t grid_n) {
    Csv e(dir / "extremal.csv", {"t", "phi0", "z0"});
    for (std::size_t i = 0; i <= sol.phi0.n(); ++i) {
        const double t = sol.phi0.t(i);
        e.row({t, sol.phi0.phi[i], sol.z0_path(t)});
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto& r = sol.refinement;
    Csv s(dir / "extremal_summary.csv",
          {"value_F", "value_S", "gap", "gap_extrapolated", "error_estimate", "order", "z0_terminal",
           "z0_terminal_extrapolated", "grid_n", "n_starts", "n_converged", "gap_spread", "path_spread",
           "non_unique_suspected", "hessian_max_eig", "grad_norm", "shoot_gap"});
    s.row({sol.value_F, sol.value_S, sol.gap, sol.best_gap(), r ? r->error_estimate : nan, r ? r->order : nan,
           sol.diag.z0_terminal, r ? r->z0_terminal_extrapolated : sol.diag.z0_terminal, static_cast<double>(grid_n),
           static_cast<double>(sol.diag.n_starts), static_cast<double>(sol.diag.n_converged), sol.diag.gap_spread,
           sol.diag.path_spread, sol.diag.non_unique_suspected ? 1.0 : 0.0, sol.diag.hessian_max_eig,
           sol.diag.grad_norm, shoot_gap});
}

}  // namespace

ExtremalSolution solve_extremal(const RunConfig& cfg) {
    const ProcessModel m = cfg.model.build();
    const FunctionalSpec F = cfg.F.build();
    DirectOptions opt;
    opt.n = cfg.grid_n;
    opt.multistarts = cfg.multistarts;
    opt.workers = cfg.workers;
    opt.grad_tol = cfg.grad_tol;
    if (!cfg.refine) return maximize_direct(F, m, opt);
    return refine_and_extrapolate(
        [&](std::size_t n) {
            DirectOptions o = opt;
            o.n = n;
            return maximize_direct(F, m, o);
        },
        cfg.grid_n);
}

int cmd_variational(const RunConfig& cfg, std::ostream& log) {
    ExtremalSolution sol;
    double shoot_gap = std::numeric_limits<double>::quiet_NaN();
    try {
        sol = solve_extremal(cfg);
        try {
            shoot_gap = euler_lagrange_shoot(cfg.F.build(), cfg.model.build()).gap;
        } catch (const Error& e) {
            if (e.code() != Errc::NotApplicable) log << "shooting: " << e.what() << '\n';
        }
    } catch (const Error& e) {
        log << "variational solve failed: " << e.what() << '\n';
        return exit_code::variational;
    }
    const fs::path dir = out_dir(cfg);
    write_extremal(dir, sol, shoot_gap, cfg.grid_n);
    log << "gap = " << num(sol.best_gap()) << "  value_F = " << num(sol.value_F) << "  value_S = " << num(sol.value_S)
        << '\n';
    if (sol.refinement)
        log << "z0(T) extrapolated = " << num(sol.refinement->z0_terminal_extrapolated)
            << "  refinement order = " << num(sol.refinement->order) << '\n';
    if (!std::isnan(shoot_gap)) log << "shooting gap = " << num(shoot_gap) << '\n';
    return exit_code::ok;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
    ExtremalSolution sol;
    try {
        sol = solve_extremal(cfg);
    } catch (const Error& e) {
        log << "variational solve failed: " << e.what() << '\n';
        return exit_code::variational;
    }
    const fs::path dir = out_dir(cfg);
    write_extremal(dir, sol, std::numeric_limits<double>::quiet_NaN(), cfg.grid_n);
    SweepResult res;
    RoughLdReport rough;
    try {
        const ProcessModel m = cfg.model.build();
        SweepOptions so;
        so.eps_grid = cfg.eps_list;
        so.prefactor.n = cfg.samples;
        so.prefactor.seed = cfg.seed;
        so.prefactor.h = cfg.h;
        so.prefactor.workers = cfg.workers;
        so.prefactor.dt = cfg.dt;
        if (cfg.dump_paths > 0) {
            so.prefactor.dump_dir = (dir / "paths").string();
            so.prefactor.dump_paths = cfg.dump_paths;
        }
        so.k0.n = cfg.k0_samples;
        so.k0.seed = cfg.seed;
        so.k0.workers = cfg.workers;
        res = epsilon_sweep(m, cfg.F.build(), cfg.H.build(), sol, so);
        rough = rough_ld_check(res.records, sol.best_gap());
    } catch (const Error& e) {
        log << "estimator failed: " << e.what() << '\n';
        return exit_code::estimator;
    }

    Csv sw(dir / "sweep.csv", {"eps", "n_samples", "log_leading", "prefactor", "se", "clipped", "h", "total"});
    for (const auto& r : res.records)
        sw.row({r.eps, static_cast<double>(r.n_samples), r.log_leading, r.prefactor_mean, r.prefactor_se,
                static_cast<double>(r.n_clipped), r.h, r.total()});
    const auto& f = res.fit;
    const auto& k = res.k0;
    Csv fc(dir / "fit.csv", {"n_terms", "K0_fit", "K0_fit_se", "K0_fit_lo", "K0_fit_hi", "K1_fit", "K1_fit_se",
                             "K1_fit_lo", "K1_fit_hi", "K2_fit", "K2_fit_se", "cov01", "chi2", "condition", "K0_mc",
                             "K0_mc_se", "K0_mc_lo", "K0_mc_hi", "K1_gauss", "K1_gauss_se", "gap"});
    fc.row({static_cast<double>(f.n_terms), f.K0, f.K0_se, f.K0 - kZ95 * f.K0_se, f.K0 + kZ95 * f.K0_se, f.K1,
            f.K1_se, f.K1 - kZ95 * f.K1_se, f.K1 + kZ95 * f.K1_se, f.K2, f.K2_se, f.cov01, f.chi2, f.condition,
            k.value, k.se, k.value - kZ95 * k.se, k.value + kZ95 * k.se,
            k.k1_available ? k.k1_gauss : std::numeric_limits<double>::quiet_NaN(),
            k.k1_available ? k.k1_gauss_se : std::numeric_limits<double>::quiet_NaN(), sol.best_gap()});
    Csv dg(dir / "diagnostics.csv",
           {"eps", "tail_fraction", "tail_se", "m2_T4", "m2_T2", "m2_T", "m4_T4", "m4_T2", "m4_T", "m4_T_se", "q_order",
            "mean_q2", "mean_abs_taylor_residual", "rough_ld_deviation", "rough_ld_se"});
    for (std::size_t i = 0; i < res.records.size(); ++i) {
        const auto& r = res.records[i];
        dg.row({r.eps, r.tail_fraction, r.tail_se, r.m2[0], r.m2[1], r.m2[2], r.m4[0], r.m4[1], r.m4[2], r.m4_se[2],
                static_cast<double>(r.q_order), r.mean_q2, r.mean_abs_taylor_residual, rough.rows[i].deviation,
                rough.rows[i].se});
    }
    log << "K0_mc  = " << num(k.value) << " +/- " << num(kZ95 * k.se) << '\n';
    log << "K0_fit = " << num(f.K0) << " +/- " << num(kZ95 * f.K0_se) << '\n';
    log << "K1_fit = " << num(f.K1) << " +/- " << num(kZ95 * f.K1_se) << '\n';
    return exit_code::ok;
}

int cmd_pide(const RunConfig& cfg, std::ostream& log) {
    const PideConfig& pc = cfg.pide;
    CompareReport cmp;
    AsymptoticReport asym;
    try {
        const ProcessModel m = pc.model.build();
        const Coefficient c = Coefficient::expression(Expr::parse(pc.c));
        const InitialDatum g = initial_datum(pc.g);
        Grid1D grid;
        grid.x_min = pc.x_min;
        grid.x_max = pc.x_max;
        grid.nx = pc.nx;
        grid.nt = pc.nt;
        grid.eps = pc.eps;
        grid.t_end = pc.t_end;
        SpecificCaseOptions so;
        so.mc.n = pc.mc_samples;
        so.mc.seed = cfg.seed;
        so.mc.dt = pc.mc_dt;
        so.mc.workers = cfg.workers;
        so.g_is_one = pc.g == "one";
        cmp = specific_case_check(m, c, g, grid, so);
        grid.nt = 0;
        asym = asymptotic_compare(m, c, g, grid, pc.eps_list, so.probes);
    } catch (const Error& e) {
        log << "pide failed: " << e.what() << '\n';
        return e.code() == Errc::ConfigError ? exit_code::config : exit_code::pide;
    }
    const fs::path dir = out_dir(cfg);
    Csv cc(dir / "pide_compare.csv", {"eps", "t", "x", "u_fd", "u_factorized", "u_mc", "u_mc_se", "scaled",
                                      "rel_fd_mc", "rel_factorization"});
    for (const auto& r : cmp.rows)
        cc.row({cmp.eps, r.t, r.x, r.u_fd, r.u_factorized, r.u_mc, r.u_mc_se, r.scaled, r.rel_fd_mc,
                r.rel_factorization});
    Csv fc(dir / "pide_fit.csv", {"t", "x", "k0", "k0_lo", "k0_hi", "k1", "k1_lo", "k1_hi", "flow_limit"});
    for (const auto& f : asym.fits) fc.row({f.t, f.x, f.k0, f.k0_lo, f.k0_hi, f.k1, f.k1_lo, f.k1_hi, f.flow_limit});
    Csv sc(dir / "pide_summary.csv", {"eps", "max_rel_fd_mc", "max_rel_factorization", "scaled_bounded",
                                      "max_rel_one", "leak_ratio", "nt", "dt", "fit_condition"});
    const auto& s = cmp.solution;
    sc.row({cmp.eps, cmp.max_rel_fd_mc, cmp.max_rel_factorization, cmp.scaled_bounded ? 1.0 : 0.0,
            cmp.max_rel_one < 0 ? std::numeric_limits<double>::quiet_NaN() : cmp.max_rel_one, s.leak_ratio,
            static_cast<double>(s.nt), s.dt, asym.condition});
    Csv gc(dir / "pide_grid.csv", {"t", "x", "value"});
    for (std::size_t k = 0; k < s.times.size(); ++k)
        for (std::size_t i = 0; i < s.x.size(); ++i) gc.row({s.times[k], s.x[i], s.u[k][i]});
    log << "max FD/MC relative discrepancy = " << num(cmp.max_rel_fd_mc) << '\n';
    log << "max factorization error = " << num(cmp.max_rel_factorization) << '\n';
    if (cmp.max_rel_one >= 0) log << "g = 1 check: max |u e^{-t/eps} - 1| = " << num(cmp.max_rel_one) << '\n';
    return exit_code::ok;
}

int cmd_report(const RunConfig& cfg, std::ostream& log) {
    const fs::path dir(cfg.out);
    try {
        const Table ex = read_csv(dir / "extremal_summary.csv");
        const Table sw = read_csv(dir / "sweep.csv");
        const Table fit = read_csv(dir / "fit.csv");
        const Table dg = read_csv(dir / "diagnostics.csv");
        if (ex.rows.empty() || sw.rows.empty() || fit.rows.empty())
            fail(Errc::MissingArtifacts, "artifacts without data rows");
        std::vector<std::string> flags;
        std::ostringstream rep;
        rep << "ldexpand report\n\n[extremal]\n";
        for (const auto& h : ex.header) rep << "  " << h << " = " << num(ex.at(0, h)) << '\n';
        if (ex.at(0, "non_unique_suspected") != 0.0) flags.push_back("extremal: several maximizers suspected");
        const double order = ex.at(0, "order");
        if (std::isfinite(order) && order < 1.0) flags.push_back("extremal: refinement order below 1");

        std::vector<EstimateRecord> recs;
        for (std::size_t i = 0; i < sw.rows.size(); ++i) {
            EstimateRecord r;
            r.eps = sw.at(i, "eps");
            r.prefactor_mean = sw.at(i, "prefactor");
            r.prefactor_se = sw.at(i, "se");
            recs.push_back(r);
        }
        const double gap = ex.at(0, "gap_extrapolated");
        const RoughLdReport rough = recs.size() >= 2 ? rough_ld_check(recs, gap) : RoughLdReport{};
        rep << "\n[sweep]\n  eps prefactor se eps_log_total rough_ld_deviation\n";
        for (std::size_t i = 0; i < rough.rows.size(); ++i)
            rep << "  " << num(recs[i].eps) << ' ' << num(recs[i].prefactor_mean) << ' ' << num(recs[i].prefactor_se)
                << ' ' << num(rough.rows[i].eps_log_total) << ' ' << num(rough.rows[i].deviation) << '\n';
        if (!rough.monotone_in_bands) flags.push_back("sweep: rough-LD deviation not monotone within error bands");

        rep << "\n[fit]\n";
        for (const auto& h : fit.header) rep << "  " << h << " = " << num(fit.at(0, h)) << '\n';
        const bool overlap = fit.at(0, "K0_fit_lo") <= fit.at(0, "K0_mc_hi") &&
                             fit.at(0, "K0_mc_lo") <= fit.at(0, "K0_fit_hi");
        if (!overlap) flags.push_back("fit: K0_fit and K0_mc intervals do not overlap");

        rep << "\n[diagnostics]\n  eps tail_fraction m4_T\n";
        for (std::size_t i = 0; i < dg.rows.size(); ++i) {
            rep << "  " << num(dg.at(i, "eps")) << ' ' << num(dg.at(i, "tail_fraction")) << ' '
                << num(dg.at(i, "m4_T")) << '\n';
            if (i > 0 && dg.at(i, "tail_fraction") > dg.at(i - 1, "tail_fraction") +
                                                         2.0 * std::hypot(dg.at(i, "tail_se"), dg.at(i - 1, "tail_se")))
                flags.push_back("diagnostics: tail fraction grows at eps=" + num(dg.at(i, "eps")));
            if (dg.at(i, "m4_T") > 3.0 * dg.at(0, "m4_T"))
                flags.push_back("diagnostics: fourth moment above 3x its first value at eps=" + num(dg.at(i, "eps")));
        }

        if (fs::exists(dir / "pide_summary.csv")) {
            const Table ps = read_csv(dir / "pide_summary.csv");
            rep << "\n[pide]\n";
            for (const auto& h : ps.header) rep << "  " << h << " = " << num(ps.at(0, h)) << '\n';
            if (ps.at(0, "max_rel_fd_mc") >= 0.02) flags.push_back("pide: FD/MC discrepancy at or above 2%");
            if (ps.at(0, "max_rel_factorization") > 1e-6) flags.push_back("pide: factorization error above 1e-6");
        }

        rep << "\n[flags]\n";
        if (flags.empty()) rep << "  none\n";
        for (const auto& f : flags) rep << "  FAIL " << f << '\n';
        std::ofstream(dir / "report.txt") << rep.str();

        std::ofstream pf(dir / "prefactor_vs_sqrt_eps.dat");
        pf << "# sqrt_eps prefactor\n";
        for (const auto& r : recs) pf << num(std::sqrt(r.eps)) << ' ' << num(r.prefactor_mean) << '\n';
        std::ofstream rl(dir / "rough_ld.dat");
        rl << "# eps eps_log_total\n";
        for (const auto& r : rough.rows) rl << num(r.eps) << ' ' << num(r.eps_log_total) << '\n';
        log << rep.str();
    } catch (const Error& e) {
        log << "report failed: " << e.what() << '\n';
        return exit_code::report;
    }
    return exit_code::ok;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"ldexpand: precise large-deviation asymptotics for jump-diffusions"};
    app.require_subcommand(1);

    std::string config_path, model, F, H, eps_list, out, preset, g;
    std::optional<std::size_t> samples, k0_samples, grid_n;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers, dump_paths;
    std::optional<double> eps;

    auto common = [&](CLI::App* s) {
        s->add_option("--config", config_path, "JSON config file");
        s->add_option("--model", model, "model preset");
        s->add_option("--F", F, "functional F preset");
        s->add_option("--H", H, "functional H preset");
        s->add_option("--eps-list", eps_list, "comma-separated eps values");
        s->add_option("--samples", samples, "Monte Carlo samples per eps");
        s->add_option("--k0-samples", k0_samples, "samples for the limit-diffusion K0");
        s->add_option("--seed", seed, "root seed");
        s->add_option("--grid-n", grid_n, "extremal grid intervals");
        s->add_option("--workers", workers, "worker threads");
        s->add_option("--out", out, "output directory");
        s->add_option("--dump-paths", dump_paths, "write this many simulated paths per eps");
    };
    auto* var = app.add_subcommand("variational", "solve for the extremal path");
    auto* sweep = app.add_subcommand("sweep", "eps sweep of the prefactor and coefficient fit");
    auto* pide = app.add_subcommand("pide", "finite-difference PIDE against Feynman-Kac Monte Carlo");
    auto* report = app.add_subcommand("report", "merge outputs into a report");
    for (auto* s : {var, sweep, pide, report}) common(s);
    pide->add_option("--preset", preset, "PIDE model preset");
    pide->add_option("--eps", eps, "eps for the FD/MC comparison");
    pide->add_option("--g", g, "initial datum: one, bump or an expression in x");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_code::ok : exit_code::config;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
        if (!model.empty()) {
            cfg.model = ModelChoice{model, std::nullopt};
            (void)cfg.model.build();
        }
        if (!F.empty()) {
            cfg.F = FunctionalChoice{F, std::nullopt};
            (void)cfg.F.build();
        }
        if (!H.empty()) {
            cfg.H = FunctionalChoice{H, std::nullopt};
            (void)cfg.H.build();
        }
        const bool is_pide = pide->parsed();
        if (!eps_list.empty()) {
            const auto v = parse_number_list(eps_list, "--eps-list");
            (is_pide ? cfg.pide.eps_list : cfg.eps_list) = v;
        }
        if (samples) (is_pide ? cfg.pide.mc_samples : cfg.samples) = *samples;
        if (k0_samples) cfg.k0_samples = *k0_samples;
        if (seed) cfg.seed = *seed;
        if (grid_n) cfg.grid_n = *grid_n;
        if (workers) cfg.workers = *workers;
        if (dump_paths) cfg.dump_paths = *dump_paths;
        if (!out.empty()) cfg.out = out;
        if (!preset.empty()) {
            cfg.pide.model = ModelChoice{preset, std::nullopt};
            (void)cfg.pide.model.build();
        }
        if (eps) cfg.pide.eps = *eps;
        if (!g.empty()) {
            cfg.pide.g = g;
            (void)initial_datum(g);
        }
        cfg.validate();
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_code::config;
    }

    if (var->parsed()) return cmd_variational(cfg, std::cout);
    if (sweep->parsed()) return cmd_sweep(cfg, std::cout);
    if (pide->parsed()) return cmd_pide(cfg, std::cout);
    return cmd_report(cfg, std::cout);
}

}  // namespace ldexpand
