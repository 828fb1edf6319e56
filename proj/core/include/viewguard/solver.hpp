#pragma once

#include <chrono>
#include <set>
#include <string>
#include <vector>

#include "viewguard/smt/script.hpp"

namespace viewguard {

struct SolverConfig {
  std::string name;
  std::vector<std::string> argv;  // reads the script on stdin
  bool supports_cores = true;

  /// Splits a command line such as "z3 -in" on whitespace.
  static SolverConfig from_command(const std::string& command);
};

/// z3 reading from stdin, when no solver was configured explicitly.
std::vector<SolverConfig> default_solvers();

struct SolverOutcome {
  enum class Kind { Unsat, Sat, Unknown };
  Kind kind = Kind::Unknown;
  std::set<std::string> core;  // Unsat only
  std::string reason;          // Unknown: "timeout" or "solver-error: ..."
  std::string solver;

  bool unsat() const { return kind == Kind::Unsat; }
  bool sat() const { return kind == Kind::Sat; }
};

std::string_view to_string(SolverOutcome::Kind k);

/// Interprets one solver's stdout.  Cores that mention unknown labels or
/// are missing on an Unsat answer are replaced by every declared label.
SolverOutcome parse_solver_output(const std::string& out, const std::vector<std::string>& labels);

/// Runs every solver concurrently and returns the first Sat or Unsat,
/// killing the rest.  Unknown when none decides before `budget`.
/// Throws SolverSpawnError when no solver could be started.
SolverOutcome solve(const smt::SmtScript& script, const std::vector<SolverConfig>& configs,
                    std::chrono::milliseconds budget);

/// Like solve, but once an Unsat arrives keeps listening for `window` and
/// returns the smallest core.  With `verify`, the core is re-checked on the
/// restricted script and widened to all labels if that check is not Unsat.
SolverOutcome solve_for_core(const smt::SmtScript& script, const std::vector<SolverConfig>& configs,
                             std::chrono::milliseconds budget,
                             std::chrono::milliseconds window = std::chrono::milliseconds(250), bool verify = true);

}  // namespace viewguard
