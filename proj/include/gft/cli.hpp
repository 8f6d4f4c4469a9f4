#pragma once

#include "gft/eval.hpp"
#include "gft/verify.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gft {

enum class OutputFormat { Table, Csv, Json };

struct MarketJob {
  MarketSpec spec;
  std::vector<std::string> mechanisms;
};

/// Parsed configuration file. Unknown check ids, parameter names and mechanism
/// names are rejected while parsing.
struct RunConfig {
  std::vector<CheckRequest> checks;
  std::vector<MarketJob> markets;
  std::optional<std::uint64_t> mc_n;
  std::optional<std::uint64_t> mc_seed;
  OutputFormat format = OutputFormat::Table;
  std::string output_path;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// Distribution argument: a JSON literal, a path to a JSON file, "point:<v>",
/// "uniform:<lo>:<hi>", or "v@p,v@p,...".
Distribution parse_distribution_arg(const std::string& text);

OutputFormat parse_output_format(const std::string& text);

/// Entry point of the gftlab tool. Returns 0 when everything passed, 1 when a
/// check failed, 2 on invalid input.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gft
