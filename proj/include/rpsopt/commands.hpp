#pragma once

// Subcommands behind the rpsopt executable, callable in-process.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rpsopt/ccg.hpp"
#include "rpsopt/io.hpp"
#include "rpsopt/stochastic.hpp"

namespace rpsopt {

struct SolveOptions {
  double eps = 1e-3;
  int starts = 40;
  std::uint64_t seed = 1;
  int max_iter = 30;
  std::optional<double> pin_tau_e;
  std::optional<double> pin_tau_c;  // $/kW
  long mc_samples = 100000;
};

CcgConfig make_ccg_config(const SolveOptions& opt);

struct SolveOutput {
  CcgResult result;
  std::vector<ViolationRate> montecarlo;
};

SolveOutput solve_instance(const ValidatedInstance& inst, const SolveOptions& opt);

/// solution.json, iterations.jsonl and montecarlo.json under `dir`.
void write_solve_artifacts(const ValidatedInstance& inst, const SolveOutput& out, const std::string& dir);

enum class SweepAxis { TauE, TauC };

/// One pinned-incentive solve per value, in input order.
std::vector<SweepPoint> sweep_incentive(const ValidatedInstance& inst, SweepAxis axis, const std::vector<double>& values,
                                        const SolveOptions& opt);

/// Copy of the instance with every generator of the given fuel at zero capacity.
/// Throws std::invalid_argument when no generator carries that fuel tag.
Instance retire_fuel(const Instance& inst, const std::string& fuel);

/// Copy with the renewable share scaled by `factor`.
Instance scale_rps(const Instance& inst, double factor);

/// Entry point of the executable. Exit codes: 0 success, 1 invalid instance
/// or failed solve, 2 usage or file error.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rpsopt
