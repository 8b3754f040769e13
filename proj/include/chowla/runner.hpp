#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chowla/averaging.hpp"
#include "chowla/sweep.hpp"

namespace chowla {

struct Diagnostic {
  int line = 0;
  int col = 0;
  std::string message;
  std::string to_string() const;
};

// One key = value assignment with its source position, grouped per section.
struct ConfigSection {
  std::string kind;  // "global" or "experiment"
  std::string name;  // experiment name
  int line = 0;
  std::map<std::string, std::pair<std::string, int>> entries;  // key -> (value, line)

  bool has(const std::string& k) const { return entries.count(k) != 0; }
  std::string get(const std::string& k, const std::string& fallback = "") const;
  int line_of(const std::string& k) const;
};

// Plain-text experiment configuration:
//
//   [global]
//   max_n = 1e7
//   threads = 2
//   output_dir = out
//   seed = 42
//
//   [experiment two_point]
//   kind = correlate
//   functions = liouville, liouville
//   shifts = 0, 1
//   scheme = unweighted
//   grid = 1e3 : 1.189207115002721 : 40
//
// Function specs use the mult_functions grammar.  parse() collects syntax
// problems; validate() collects semantic ones; both return every problem
// found, not just the first.
struct ExperimentConfig {
  uint64_t max_n = 10'000'000;
  uint64_t segment_size = kDefaultSegment;
  int threads = 0;
  std::string output_dir = "out";
  uint64_t seed = 1;
  std::vector<ConfigSection> experiments;
  std::string source_text;

  static ExperimentConfig parse(const std::string& text, std::vector<Diagnostic>& diags);
  static ExperimentConfig parse_file(const std::string& path, std::vector<Diagnostic>& diags);
  std::vector<Diagnostic> validate() const;
};

struct ExperimentStatus {
  std::string name;
  std::string kind;
  bool ok = false;
  std::string error;
  std::vector<std::string> outputs;  // file paths written
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version;
  uint64_t seed = 0;
  int threads = 0;
  uint64_t sieve_sweeps = 0;
  uint64_t values_sieved = 0;
  double sieve_seconds = 0;
  double sieve_throughput = 0;  // values per second
  double wall_seconds = 0;
  std::vector<ExperimentStatus> experiments;

  std::string to_json() const;
  void save(const std::string& path) const;
};

RunManifest run(const ExperimentConfig& config);

extern const char* kToolVersion;

}  // namespace chowla
