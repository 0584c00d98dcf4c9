#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ldexpand/functionals.hpp"
#include "ldexpand/model.hpp"

namespace ldexpand {

struct InlineModel {
    std::string name = "custom";
    std::string alpha = "0";
    std::string a = "0";
    std::vector<std::pair<double, std::string>> atoms;  // (size, weight expression in t, x)
    std::string density;                                // expression in t, x, u
    double support = 0.0;
    int order = 32;
    double T = 1.0;
    double x0 = 0.0;
};

struct ModelChoice {
    std::string preset = "example1";
    std::optional<InlineModel> inline_model;

    ProcessModel build() const;
    std::string label() const;
};

struct InlineFunctional {
    double constant = 0.0;
    std::vector<std::string> integrals;  // g(t, x) with x the path value
    std::vector<std::string> terminals;  // h(x)
};

struct FunctionalChoice {
    std::string preset;
    std::optional<InlineFunctional> inline_spec;

    FunctionalSpec build() const;
    std::string label() const;
};

struct PideConfig {
    ModelChoice model{"pide-special", std::nullopt};
    std::string c = "1";
    std::string g = "bump";
    double eps = 0.5;
    std::vector<double> eps_list{0.4, 0.2, 0.1};
    double x_min = -8.0, x_max = 8.0;
    std::size_t nx = 801;
    std::size_t nt = 0;
    double t_end = 1.0;
    std::size_t mc_samples = 100000;
    double mc_dt = 0.0025;
};

struct RunConfig {
    ModelChoice model;
    FunctionalChoice F{"example1-F", std::nullopt};
    FunctionalChoice H{"one", std::nullopt};
    // extremal solver
    std::size_t grid_n = 200;
    int multistarts = 5;
    double grad_tol = 1e-11;
    bool refine = true;
    // sweep
    std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05};
    std::size_t samples = 100000;
    std::size_t k0_samples = 100000;
    std::uint64_t seed = 1;
    double h = 3.0;
    double dt = 0.0;
    int dump_paths = 0;
    PideConfig pide;
    int workers = 1;
    std::string out = "out";

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Reads a JSON config on top of the defaults. Unknown keys are rejected.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Comma-separated list of numbers.
std::vector<double> parse_number_list(const std::string& text, const std::string& field);

}  // namespace ldexpand
