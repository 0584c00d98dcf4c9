#include "ldexpand/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ldexpand {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
    fail(Errc::ConfigError, "config field '" + field + "': " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) bad(where.empty() ? "<root>" : where, "expected an object");
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) bad(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
}

std::string join(const std::string& a, const char* b) { return a.empty() ? b : a + "." + b; }

double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) bad(field, "expected a number");
    return j.get<double>();
}

std::size_t get_count(const json& j, const std::string& field) {
    if (!j.is_number_integer() || j.get<long long>() < 0) bad(field, "expected a non-negative integer");
    return static_cast<std::size_t>(j.get<long long>());
}

std::string get_string(const json& j, const std::string& field) {
    if (!j.is_string()) bad(field, "expected a string");
    return j.get<std::string>();
}

std::string expr_string(const json& j, const std::string& field) {
    if (j.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << j.get<double>();
        return os.str();
    }
    const std::string s = get_string(j, field);
    try {
        (void)Expr::parse(s);
    } catch (const Error& e) {
        bad(field, e.what());
    }
    return s;
}

std::vector<double> get_numbers(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) bad(field, "expected a non-empty array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(get_number(j[i], field + "[" + std::to_string(i) + "]"));
    return v;
}

ModelChoice read_model(const json& j, const std::string& field) {
    ModelChoice mc;
    if (j.is_string()) {
        mc.preset = j.get<std::string>();
        const auto names = model_preset_names();
        if (std::find(names.begin(), names.end(), mc.preset) == names.end())
            bad(field, "unknown model preset '" + mc.preset + "'");
        return mc;
    }
    only_keys(j, field, {"name", "alpha", "a", "atoms", "density", "support", "order", "T", "x0"});
    InlineModel im;
    if (j.contains("name")) im.name = get_string(j["name"], join(field, "name"));
    if (j.contains("alpha")) im.alpha = expr_string(j["alpha"], join(field, "alpha"));
    if (j.contains("a")) im.a = expr_string(j["a"], join(field, "a"));
    if (j.contains("atoms")) {
        const auto& at = j["atoms"];
        const std::string f = join(field, "atoms");
        if (!at.is_array()) bad(f, "expected an array of {size, weight}");
        for (std::size_t i = 0; i < at.size(); ++i) {
            const std::string fi = f + "[" + std::to_string(i) + "]";
            only_keys(at[i], fi, {"size", "weight"});
            if (!at[i].contains("size") || !at[i].contains("weight")) bad(fi, "needs size and weight");
            im.atoms.emplace_back(get_number(at[i]["size"], fi + ".size"), expr_string(at[i]["weight"], fi + ".weight"));
        }
    }
    if (j.contains("density")) {
        im.density = expr_string(j["density"], join(field, "density"));
        if (!j.contains("support")) bad(join(field, "support"), "required with a density");
        im.support = get_number(j["support"], join(field, "support"));
        if (!(im.support > 0.0)) bad(join(field, "support"), "must be positive");
        if (j.contains("order")) im.order = static_cast<int>(get_count(j["order"], join(field, "order")));
    }
    if (!im.atoms.empty() && !im.density.empty()) bad(field, "give either atoms or a density, not both");
    if (j.contains("T")) im.T = get_number(j["T"], join(field, "T"));
    if (!(im.T > 0.0)) bad(join(field, "T"), "must be positive");
    if (j.contains("x0")) im.x0 = get_number(j["x0"], join(field, "x0"));
    mc.preset.clear();
    mc.inline_model = im;
    return mc;
}

FunctionalChoice read_functional(const json& j, const std::string& field) {
    FunctionalChoice fc;
    if (j.is_string()) {
        fc.preset = j.get<std::string>();
        try {
            (void)functional_preset(fc.preset);
        } catch (const Error& e) {
            bad(field, e.what());
        }
        return fc;
    }
    only_keys(j, field, {"constant", "integral", "terminal"});
    InlineFunctional f;
    if (j.contains("constant")) f.constant = get_number(j["constant"], join(field, "constant"));
    auto list = [&](const char* key, std::vector<std::string>& out) {
        if (!j.contains(key)) return;
        const auto& v = j[key];
        const std::string fk = join(field, key);
        if (v.is_string()) {
            out.push_back(expr_string(v, fk));
            return;
        }
        if (!v.is_array()) bad(fk, "expected an expression or an array of expressions");
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(expr_string(v[i], fk + "[" + std::to_string(i) + "]"));
    };
    list("integral", f.integrals);
    list("terminal", f.terminals);
    fc.inline_spec = f;
    return fc;
}

}  // namespace

ProcessModel ModelChoice::build() const {
    if (!inline_model) return model_preset(preset);
    const InlineModel& im = *inline_model;
    ProcessModel m;
    m.name = im.name;
    m.alpha = Coefficient::expression(Expr::parse(im.alpha));
    m.a = Coefficient::expression(Expr::parse(im.a));
    if (!im.atoms.empty()) {
        std::vector<JumpMeasure::Atom> atoms;
        for (const auto& [size, w] : im.atoms) atoms.push_back({size, Coefficient::expression(Expr::parse(w))});
        m.nu = JumpMeasure::atoms(std::move(atoms));
    } else if (!im.density.empty()) {
        const Expr rho = Expr::parse(im.density);
        m.nu = JumpMeasure::density([rho](double t, double x, double u) { return rho(t, x, u); }, im.support,
                                    im.order, rho.depends_on(Expr::Var::T), rho.depends_on(Expr::Var::X));
    }
    m.T = im.T;
    m.x0 = im.x0;
    m.validate();
    return m;
}

std::string ModelChoice::label() const { return inline_model ? inline_model->name : preset; }

FunctionalSpec FunctionalChoice::build() const {
    if (!inline_spec) return functional_preset(preset);
    FunctionalSpec f = FunctionalSpec::constant_value(inline_spec->constant);
    for (const auto& s : inline_spec->integrals) f += FunctionalSpec::integral_expr(Expr::parse(s));
    for (const auto& s : inline_spec->terminals) f += FunctionalSpec::terminal_expr(Expr::parse(s));
    f.name = "inline";
    return f;
}

std::string FunctionalChoice::label() const { return inline_spec ? "inline" : preset; }

void RunConfig::validate() const {
    if (grid_n < 8) bad("solver.grid_n", "must be at least 8");
    if (multistarts < 1) bad("solver.multistarts", "must be at least 1");
    if (!(grad_tol > 0.0)) bad("solver.grad_tol", "must be positive");
    if (eps_list.empty()) bad("sweep.eps", "must not be empty");
    for (double e : eps_list)
        if (!(e > 0.0)) bad("sweep.eps", "values must be positive");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) bad("sweep.eps", "values must be strictly decreasing");
    if (samples < 2) bad("sweep.samples", "must be at least 2");
    if (k0_samples < 2) bad("sweep.k0_samples", "must be at least 2");
    if (!(h > 0.0)) bad("sweep.h", "must be positive");
    if (dt < 0.0) bad("sweep.dt", "must be non-negative");
    if (workers < 1) bad("workers", "must be at least 1");
    if (out.empty()) bad("out", "must not be empty");
    if (!(pide.eps > 0.0)) bad("pide.eps", "must be positive");
    for (std::size_t i = 0; i < pide.eps_list.size(); ++i)
        if (!(pide.eps_list[i] > 0.0) || (i > 0 && !(pide.eps_list[i] < pide.eps_list[i - 1])))
            bad("pide.eps_list", "values must be positive and strictly decreasing");
    if (!(pide.x_min < pide.x_max)) bad("pide.x_min", "must be below pide.x_max");
    if (pide.nx < 16) bad("pide.nx", "must be at least 16");
    if (!(pide.t_end > 0.0)) bad("pide.t_end", "must be positive");
    if (pide.mc_samples < 2) bad("pide.mc_samples", "must be at least 2");
    if (!(pide.mc_dt > 0.0)) bad("pide.mc_dt", "must be positive");
}

RunConfig parse_config(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // count lines up to the byte offset for a readable position
        const std::size_t off = std::min<std::size_t>(e.byte, text.size());
        const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(off), '\n');
        fail(Errc::ConfigError, source + ":" + std::to_string(line) + ": " + e.what());
    }
    RunConfig c;
    only_keys(j, "", {"model", "F", "H", "solver", "sweep", "pide", "workers", "out", "dump_paths"});
    if (j.contains("model")) c.model = read_model(j["model"], "model");
    if (j.contains("F")) c.F = read_functional(j["F"], "F");
    if (j.contains("H")) c.H = read_functional(j["H"], "H");
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        only_keys(s, "solver", {"grid_n", "multistarts", "grad_tol", "refine"});
        if (s.contains("grid_n")) c.grid_n = get_count(s["grid_n"], "solver.grid_n");
        if (s.contains("multistarts")) c.multistarts = static_cast<int>(get_count(s["multistarts"], "solver.multistarts"));
        if (s.contains("grad_tol")) c.grad_tol = get_number(s["grad_tol"], "solver.grad_tol");
        if (s.contains("refine")) {
            if (!s["refine"].is_boolean()) bad("solver.refine", "expected true or false");
            c.refine = s["refine"].get<bool>();
        }
    }
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        only_keys(s, "sweep", {"eps", "samples", "k0_samples", "seed", "h", "dt"});
        if (s.contains("eps")) c.eps_list = get_numbers(s["eps"], "sweep.eps");
        if (s.contains("samples")) c.samples = get_count(s["samples"], "sweep.samples");
        if (s.contains("k0_samples")) c.k0_samples = get_count(s["k0_samples"], "sweep.k0_samples");
        if (s.contains("seed")) {
            if (!s["seed"].is_number_unsigned()) bad("sweep.seed", "expected a non-negative integer");
            c.seed = s["seed"].get<std::uint64_t>();
        }
        if (s.contains("h")) c.h = get_number(s["h"], "sweep.h");
        if (s.contains("dt")) c.dt = get_number(s["dt"], "sweep.dt");
    }
    if (j.contains("pide")) {
        const auto& p = j["pide"];
        only_keys(p, "pide", {"model", "c", "g", "eps", "eps_list", "x_min", "x_max", "nx", "nt", "t_end",
                              "mc_samples", "mc_dt"});
        if (p.contains("model")) c.pide.model = read_model(p["model"], "pide.model");
        if (p.contains("c")) c.pide.c = expr_string(p["c"], "pide.c");
        if (p.contains("g")) c.pide.g = get_string(p["g"], "pide.g");
        if (p.contains("eps")) c.pide.eps = get_number(p["eps"], "pide.eps");
        if (p.contains("eps_list")) c.pide.eps_list = get_numbers(p["eps_list"], "pide.eps_list");
        if (p.contains("x_min")) c.pide.x_min = get_number(p["x_min"], "pide.x_min");
        if (p.contains("x_max")) c.pide.x_max = get_number(p["x_max"], "pide.x_max");
        if (p.contains("nx")) c.pide.nx = get_count(p["nx"], "pide.nx");
        if (p.contains("nt")) c.pide.nt = get_count(p["nt"], "pide.nt");
        if (p.contains("t_end")) c.pide.t_end = get_number(p["t_end"], "pide.t_end");
        if (p.contains("mc_samples")) c.pide.mc_samples = get_count(p["mc_samples"], "pide.mc_samples");
        if (p.contains("mc_dt")) c.pide.mc_dt = get_number(p["mc_dt"], "pide.mc_dt");
    }
    if (j.contains("workers")) c.workers = static_cast<int>(get_count(j["workers"], "workers"));
    if (j.contains("out")) c.out = get_string(j["out"], "out");
    if (j.contains("dump_paths")) c.dump_paths = static_cast<int>(get_count(j["dump_paths"], "dump_paths"));
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::ConfigError, "cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::vector<double> parse_number_list(const std::string& text, const std::string& field) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            v.push_back(std::stod(item, &pos));
            while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            bad(field, "'" + item + "' is not a number");
        }
    }
    if (v.empty()) bad(field, "empty list");
    return v;
}

}  // namespace ldexpand
