#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ghlin/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ghlin: conjugacies and linearizations for generalized hyperbolic operators"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  int samples = -1;
  long long seed = -1;

  const char* commands[][2] = {
      {"gh-check", "check the generalized hyperbolicity criterion"},
      {"constants", "certify the decay constants (c, t, d) and the admissible eps"},
      {"conjugate", "build h and h' and verify the conjugacy identities"},
      {"linearize", "linearize a map near a fixed point"},
      {"holder-probe", "compare Holder ratios of h' against the certified constant"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output path prefix");
    sub->add_option("--samples", samples, "number of sample points")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", seed, "seed of the sample generator")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ghlin::cli::kPreconditionFailed;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  std::ifstream in(config_path);
  std::stringstream buffer;
  buffer << in.rdbuf();

  ghlin::cli::RunConfig config;
  try {
    config = ghlin::cli::parse_config(buffer.str(), command);
  } catch (const ghlin::Error& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return ghlin::cli::kPreconditionFailed;
  }
  if (!out.empty()) config.output = out;
  if (samples >= 0) config.samples = samples;
  if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
  return ghlin::cli::run(config, std::cerr);
}
