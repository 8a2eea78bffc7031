#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdlab/energy.hpp"
#include "rdlab/model.hpp"
#include "rdlab/solver.hpp"
#include "rdlab/structure.hpp"

namespace rdlab {

/// Raised on grammar or cross-reference errors, with 1-based line numbers.
struct ConfigError : std::runtime_error {
  int line;
  ConfigError(int line_, const std::string& what_)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

/// Parsed form of the line-oriented config grammar:
///   domain <id> = [lo,hi](x[lo,hi])?
///   species <k> on <domain> init const <v> | gauss <center...> <width> <amp>
///   diffuse <k> = <value> (region <ids> = <value>)*
///   react <k> += <coeff> * u<j>^<e>... gate <ids>
///   solve dt=<v> T=<v> cells=<ints> eps=<v>
///   check Umax=<v> samples=<n>
///   energy p=<ints> theta=auto|<values>
/// `#` starts a comment; unknown directives or keys are rejected with their
/// line number.
struct ConfigDocument {
  std::string echo;  // verbatim source, for the run manifest

  ModelSpec model;             // fully validated
  std::optional<SolverConfig> solver;
  std::optional<CheckerConfig> checker;

  std::vector<int> energy_p;           // empty when no energy line
  bool energy_theta_auto = true;
  std::vector<double> energy_theta_values;  // flat, consumed per group in order

  SolverConfig solver_or_default() const;
  CheckerConfig checker_or_default() const;
  std::vector<EnergyConfig> energy_configs() const;
};

ConfigDocument parse_config(const std::string& text);

/// Config text whose parse reproduces builtin(name, params) exactly,
/// including the example's default solve/check/energy lines.
std::string builtin_config_text(const std::string& name, const BuiltinParams& params = {});

std::string serialize_config(const ModelSpec& model, const SolverConfig& solver,
                             const CheckerConfig& checker, const std::vector<int>& energy_p);

}  // namespace rdlab
