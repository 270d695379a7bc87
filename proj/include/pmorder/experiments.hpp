#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pmorder/io.hpp"

namespace pmorder {

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 0;
  Json params = Json::object();  // kind-specific; defaults filled in by validation
  std::optional<std::string> out_dir;
};

struct Verdict {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string oracle;
};

struct ExperimentReport {
  std::string kind;
  Json inputs;   // normalized config echo
  Json results;  // computed quantities
  std::vector<Verdict> verdicts;
  std::deque<Table> tables;  // stable references while tables are filled
  std::string git_hash;
  std::uint64_t seed = 0;
  std::string timestamp;

  bool passed() const;
  Json to_json() const;
};

const std::vector<std::string>& experiment_kinds();

/// Schema check: top-level keys {kind, seed, params, out_dir}; params keys
/// must belong to the kind. Unknown fields are errors. Returns the config
/// with every parameter default made explicit.
ExperimentConfig parse_config(const Json& j);

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  unsigned threads = 1;
};

ExperimentReport run_experiment(ExperimentConfig config, const RunOptions& options = {});

// report.json plus tables/<name>.csv under `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

std::string build_git_hash();

}  // namespace pmorder
