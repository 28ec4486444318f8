#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"

#include "ghlin/errors.hpp"
#include "ghlin/gh_operator.hpp"
#include "ghlin/perturbation.hpp"

namespace ghlin::cli {

/// A malformed configuration. The message carries the offending line when known.
class ConfigError : public PreconditionError {
 public:
  ConfigError(const std::string& message, int line);
  int line() const { return line_; }

 private:
  int line_;
};

enum ExitCode : int { kOk = 0, kResidualExceeded = 1, kPreconditionFailed = 2 };

struct RunConfig {
  std::string command;
  nlohmann::json operator_desc;
  std::optional<nlohmann::json> perturbation;
  std::optional<nlohmann::json> map;  ///< fixed point and nonlinearity for linearize
  double gamma = 0.5;
  double tol = 1e-8;
  double picard_tol = 1e-6;
  std::optional<double> theta;
  double cutoff_r = 0.5;
  int samples = 100;
  std::uint64_t seed = 1;
  std::string output = "ghlin";
  std::string source;  ///< raw config text, for line references
};

/// Parses and validates a JSON config for the given command.
RunConfig parse_config(const std::string& text, const std::string& command);

/// Operator descriptor: {"kind": "shift", "left_tail", "right_tail", "core": {"<index>": w, ...}}
/// or {"kind": "matrix", "rows": [[...], ...]}, each with optional "norm" and "t".
GHOperator parse_operator(const nlohmann::json& desc);
NormKind parse_norm(const nlohmann::json& desc);
/// Perturbation descriptor with "kind" zero | constant | sine | saturating.
Perturbation parse_perturbation(const nlohmann::json& desc, const GHOperator& op);
StateVector parse_vector(const nlohmann::json& desc, const GHOperator& op);
nlohmann::json vector_to_json(const StateVector& v);

/// Executes the command, writes <output>.report.json (and .samples.csv where
/// applicable) and returns the exit code.
int run(const RunConfig& config, std::ostream& log);

}  // namespace ghlin::cli
