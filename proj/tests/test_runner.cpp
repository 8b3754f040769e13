#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "chowla/runner.hpp"

using namespace chowla;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kSmallConfig = R"(
# two experiments sharing one sieve sweep
[global]
max_n = 200000
threads = 2
output_dir = {DIR}
seed = 7

[experiment two_point]
kind = correlate
functions = liouville, liouville
shifts = 0, 1
scheme = unweighted
grid = 1000 : 4.0 : 4

[experiment race_small]
kind = race
grid = 1000 : 4.0 : 4
)";

std::string config_with_dir(const std::string& text, const std::string& dir) {
  std::string out = text;
  auto pos = out.find("{DIR}");
  out.replace(pos, 5, dir);
  return out;
}

}  // namespace

TEST_CASE("config parse and global keys") {
  std::vector<Diagnostic> diags;
  ExperimentConfig cfg = ExperimentConfig::parse(config_with_dir(kSmallConfig, "/tmp/x"), diags);
  CHECK(diags.empty());
  CHECK(cfg.max_n == 200000);
  CHECK(cfg.threads == 2);
  CHECK(cfg.seed == 7);
  CHECK(cfg.experiments.size() == 2);
  CHECK(cfg.validate().empty());
}

TEST_CASE("parse diagnostics carry line numbers and find every problem") {
  std::vector<Diagnostic> diags;
  std::string bad =
      "[global]\n"
      "max_n = nope\n"
      "stray line\n"
      "[weird]\n"
      "k = 1\n";
  ExperimentConfig::parse(bad, diags);
  REQUIRE(diags.size() >= 3);
  bool saw_maxn = false, saw_stray = false, saw_weird = false;
  for (const auto& d : diags) {
    if (d.message.find("max_n") != std::string::npos) {
      saw_maxn = true;
      CHECK(d.line == 2);
    }
    if (d.message.find("key = value") != std::string::npos) saw_stray = true;
    if (d.message.find("unknown section") != std::string::npos) saw_weird = true;
  }
  CHECK(saw_maxn);
  CHECK(saw_stray);
  CHECK(saw_weird);
}

TEST_CASE("validate: duplicate names, bad character index, oversized shifts") {
  std::string text =
      "[global]\n"
      "max_n = 10000\n"
      "[experiment a]\n"
      "kind = correlate\n"
      "functions = char(q=4,index=5)\n"
      "shifts = 0\n"
      "grid = 100 : 2.0 : 3\n"
      "[experiment a]\n"
      "kind = race\n"
      "grid = 100 : 2.0 : 3\n"
      "[experiment b]\n"
      "kind = correlate\n"
      "functions = liouville\n"
      "shifts = 9000\n"
      "grid = 100 : 2.0 : 3\n";
  std::vector<Diagnostic> parse_diags;
  ExperimentConfig cfg = ExperimentConfig::parse(text, parse_diags);
  CHECK(parse_diags.empty());
  auto diags = cfg.validate();
  bool dup = false, idx = false, shift = false;
  for (const auto& d : diags) {
    if (d.message.find("duplicate experiment name") != std::string::npos) dup = true;
    if (d.message.find("index out of range") != std::string::npos) idx = true;
    if (d.message.find("exceeds max_n/2") != std::string::npos) shift = true;
  }
  CHECK(dup);
  CHECK(idx);
  CHECK(shift);
}

TEST_CASE("empty experiment list yields an empty manifest") {
  std::vector<Diagnostic> diags;
  ExperimentConfig cfg = ExperimentConfig::parse("[global]\noutput_dir = /tmp/chowla_empty\n", diags);
  CHECK(diags.empty());
  RunManifest m = run(cfg);
  CHECK(m.experiments.empty());
  CHECK(m.sieve_sweeps == 0);
  CHECK(fs::exists("/tmp/chowla_empty/manifest.json"));
}

TEST_CASE("run: shared single sweep, outputs written, determinism across thread counts") {
  fs::remove_all("/tmp/chowla_run_a");
  fs::remove_all("/tmp/chowla_run_b");

  std::vector<Diagnostic> diags;
  ExperimentConfig cfg =
      ExperimentConfig::parse(config_with_dir(kSmallConfig, "/tmp/chowla_run_a"), diags);
  REQUIRE(diags.empty());
  RunManifest m = run(cfg);
  CHECK(m.sieve_sweeps == 1);  // both experiments share the sweep
  REQUIRE(m.experiments.size() == 2);
  CHECK(m.experiments[0].ok);
  CHECK(m.experiments[1].ok);
  CHECK(fs::exists("/tmp/chowla_run_a/two_point.csv"));
  CHECK(fs::exists("/tmp/chowla_run_a/race_small.csv"));
  // the sweep covers the largest consumer limit: grid max 1000 * 4^3
  CHECK(m.values_sieved >= 64000);

  // rerun with a different thread count and segment: identical CSV bytes
  std::string text            = config_with_dir(kSmallConfig, "/tmp/chowla_run_b");
  auto pos = text.find("threads = 2");
  text.replace(pos, 11, "threads = 1");
  std::vector<Diagnostic> diags2;
  ExperimentConfig cfg2 = ExperimentConfig::parse(text, diags2);
  cfg2.segment_size = 4096;  // different block boundaries must not matter
  RunManifest m2 = run(cfg2);
  REQUIRE(m2.experiments.size() == 2);
  CHECK(slurp("/tmp/chowla_run_a/two_point.csv") == slurp("/tmp/chowla_run_b/two_point.csv"));
  CHECK(slurp("/tmp/chowla_run_a/race_small.csv") == slurp("/tmp/chowla_run_b/race_small.csv"));

  // identical rerun is bit-identical including the config hash
  fs::remove_all("/tmp/chowla_run_b");
  RunManifest m3 = run(cfg);
  CHECK(m3.config_hash == m.config_hash);
  CHECK(slurp("/tmp/chowla_run_a/two_point.csv") == slurp("/tmp/chowla_run_a/two_point.csv"));
}

TEST_CASE("fault isolation: a failing experiment does not abort its siblings") {
  std::string text =
      "[global]\n"
      "max_n = 100000\n"
      "output_dir = /tmp/chowla_fault\n"
      "[experiment good]\n"
      "kind = correlate\n"
      "functions = liouville\n"
      "shifts = 0\n"
      "grid = 100 : 10.0 : 3\n"
      "[experiment bad]\n"
      "kind = smooth\n"
      "alpha = 1/25\n"  // 1/alpha = 25 beyond the Dickman u_max of 20
      "beta = 1/2\n"
      "grid = 100 : 10.0 : 3\n";
  std::vector<Diagnostic> diags;
  ExperimentConfig cfg = ExperimentConfig::parse(text, diags);
  REQUIRE(diags.empty());
  RunManifest m = run(cfg);
  REQUIRE(m.experiments.size() == 2);
  CHECK(m.experiments[0].ok);
  CHECK(!m.experiments[1].ok);
  CHECK(!m.experiments[1].error.empty());
}

TEST_CASE("manifest JSON records the contract fields") {
  std::vector<Diagnostic> diags;
  ExperimentConfig cfg =
      ExperimentConfig::parse(config_with_dir(kSmallConfig, "/tmp/chowla_run_c"), diags);
  RunManifest m = run(cfg);
  std::string j = m.to_json();
  for (const char* key :
       {"config_hash", "tool_version", "seed", "threads", "sieve_sweeps", "values_sieved",
        "sieve_throughput_per_s", "wall_seconds", "experiments"})
    CHECK(j.find(key) != std::string::npos);
}

TEST_CASE("a patterns + straighten config exercises the non-sweep paths") {
  std::string text =
      "[global]\n"
      "max_n = 100000\n"
      "output_dir = /tmp/chowla_run_d\n"
      "seed = 11\n"
      "[experiment pats]\n"
      "kind = patterns\n"
      "k = 3\n"
      "max = 100000\n"
      "fn = liouville\n"
      "[experiment snap]\n"
      "kind = straighten\n"
      "variant = dirichlet\n"
      "q = 12\n"
      "noise = 0.04\n"
      "[experiment arch]\n"
      "kind = straighten\n"
      "variant = archimedean\n"
      "t0 = 2.5\n"
      "noise = 0.02\n"
      "xmax = 500\n";
  std::vector<Diagnostic> diags;
  ExperimentConfig cfg = ExperimentConfig::parse(text, diags);
  REQUIRE(diags.empty());
  REQUIRE(cfg.validate().empty());
  RunManifest m = run(cfg);
  for (const auto& e : m.experiments) {
    INFO(e.name, ": ", e.error);
    CHECK(e.ok);
  }
  std::string snap = slurp("/tmp/chowla_run_d/snap.json");
  CHECK(snap.find("\"recovered_same_character\": true") != std::string::npos);
  std::string arch = slurp("/tmp/chowla_run_d/arch.json");
  CHECK(arch.find("t_recovered") != std::string::npos);
}
