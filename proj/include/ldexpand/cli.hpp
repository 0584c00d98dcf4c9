#pragma once

#include <iosfwd>

#include "ldexpand/config.hpp"
#include "ldexpand/variational.hpp"

namespace ldexpand {

namespace exit_code {
constexpr int ok = 0;
constexpr int config = 1;
constexpr int variational = 2;
constexpr int estimator = 3;
constexpr int pide = 4;
constexpr int report = 5;
}  // namespace exit_code

/// Direct solve at grid_n (with n, 2n, 4n refinement when enabled).
ExtremalSolution solve_extremal(const RunConfig& cfg);

int cmd_variational(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& log);
int cmd_pide(const RunConfig& cfg, std::ostream& log);
int cmd_report(const RunConfig& cfg, std::ostream& log);

/// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace ldexpand
