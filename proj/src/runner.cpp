#include "chowla/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "chowla/correlation.hpp"
#include "chowla/io.hpp"
#include "chowla/patterns.hpp"
#include "chowla/pretense.hpp"
#include "chowla/smoothness.hpp"
#include "chowla/straightening.hpp"
#include "chowla/rng.hpp"

namespace chowla {

const char* kToolVersion = "0.1.0";

using nlohmann::json;

std::string Diagnostic::to_string() const {
  std::ostringstream ss;
  ss << "line " << line << ", col " << col << ": " << message;
  return ss.str();
}

std::string ConfigSection::get(const std::string& k, const std::string& fallback) const {
  auto it = entries.find(k);
  return it == entries.end() ? fallback : it->second.first;
}

int ConfigSection::line_of(const std::string& k) const {
  auto it = entries.find(k);
  return it == entries.end() ? line : it->second.second;
}

// ---------------------------------------------------------------------------
// parsing

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool parse_number(const std::string& s, double& out) {
  try {
    size_t used = 0;
    out = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    return used == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_u64(const std::string& s, uint64_t& out) {
  double v;
  if (!parse_number(s, v) || v < 0 || v != std::floor(v) || v > 1.8e19) return false;
  out = static_cast<uint64_t>(v);
  return true;
}

bool parse_i64(const std::string& s, int64_t& out) {
  double v;
  if (!parse_number(s, v) || v != std::floor(v)) return false;
  out = static_cast<int64_t>(v);
  return true;
}

// "1/2" or "0.5" (converted to an exact small rational when terminating)
bool parse_rational(const std::string& s, RationalExponent& out) {
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    uint64_t num, den;
    if (!parse_u64(trim(s.substr(0, slash)), num) || !parse_u64(trim(s.substr(slash + 1)), den))
      return false;
    if (num == 0 || den == 0 || num >= den) return false;
    out = {num, den};
    return true;
  }
  double v;
  if (!parse_number(s, v) || !(v > 0) || !(v < 1)) return false;
  // nearest rational with denominator <= 64
  for (uint64_t den = 2; den <= 64; ++den) {
    uint64_t num = static_cast<uint64_t>(std::llround(v * den));
    if (num >= 1 && num < den && std::abs(v - static_cast<double>(num) / den) < 1e-12) {
      out = {num, den};
      return true;
    }
  }
  return false;
}

// "x0 : ratio : count"
bool parse_grid(const std::string& s, ScaleGrid& out) {
  auto parts = split(s, ':');
  if (parts.size() != 3) return false;
  double x0, ratio, count;
  if (!parse_number(parts[0], x0) || !parse_number(parts[1], ratio) ||
      !parse_number(parts[2], count))
    return false;
  if (count < 1 || count != std::floor(count) || count > 100000) return false;
  try {
    out = ScaleGrid::geometric(x0, ratio, static_cast<int>(count));
  } catch (...) {
    return false;
  }
  return true;
}

const std::vector<std::string> kKinds = {
    "correlate", "fd_table",  "isotopy_arch", "isotopy_nonarch", "equidist",
    "pretense",  "fit",       "race",         "smooth",          "patterns",
    "straighten", "compare_avgs", "three_point"};

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text,
                                         std::vector<Diagnostic>& diags) {
  ExperimentConfig cfg;
  cfg.source_text = text;
  ConfigSection* current = nullptr;
  ConfigSection global;
  global.kind = "global";

  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        diags.push_back({line_no, static_cast<int>(raw.size()), "unterminated section header"});
        continue;
      }
      std::string inside = trim(line.substr(1, line.size() - 2));
      if (inside == "global") {
        current = &global;
      } else if (inside.rfind("experiment", 0) == 0) {
        std::string name = trim(inside.substr(10));
        if (!name.empty() && name.front() == '"' && name.back() == '"' && name.size() >= 2)
          name = name.substr(1, name.size() - 2);
        if (name.empty()) {
          diags.push_back({line_no, 1, "experiment section needs a name"});
          continue;
        }
        ConfigSection sec;
        sec.kind = "experiment";
        sec.name = name;
        sec.line = line_no;
        cfg.experiments.push_back(sec);
        current = &cfg.experiments.back();
      } else {
        diags.push_back({line_no, 1, "unknown section '" + inside + "'"});
        current = nullptr;
      }
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string::npos) {
      diags.push_back({line_no, 1, "expected 'key = value'"});
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      diags.push_back({line_no, 1, "empty key"});
      continue;
    }
    if (!current) {
      diags.push_back({line_no, 1, "assignment outside any section"});
      continue;
    }
    if (current->entries.count(key))
      diags.push_back({line_no, 1, "duplicate key '" + key + "'"});
    current->entries[key] = {value, line_no};
  }

  // fold global keys
  uint64_t u;
  if (global.has("max_n")) {
    if (parse_u64(global.get("max_n"), u) && u >= 10)
      cfg.max_n = u;
    else
      diags.push_back({global.line_of("max_n"), 1, "bad max_n"});
  }
  if (global.has("segment_size")) {
    if (parse_u64(global.get("segment_size"), u) && u >= 1024)
      cfg.segment_size = u;
    else
      diags.push_back({global.line_of("segment_size"), 1, "bad segment_size (min 1024)"});
  }
  if (global.has("threads")) {
    if (parse_u64(global.get("threads"), u) && u <= 256)
      cfg.threads = static_cast<int>(u);
    else
      diags.push_back({global.line_of("threads"), 1, "bad threads"});
  }
  if (global.has("seed")) {
    if (parse_u64(global.get("seed"), u))
      cfg.seed = u;
    else
      diags.push_back({global.line_of("seed"), 1, "bad seed"});
  }
  if (global.has("output_dir")) cfg.output_dir = global.get("output_dir");
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path,
                                              std::vector<Diagnostic>& diags) {
  std::ifstream is(path);
  if (!is) {
    diags.push_back({0, 0, "cannot open config file: " + path});
    return {};
  }
  std::stringstream buf;
  buf << is.rdbuf();
  return parse(buf.str(), diags);
}

// ---------------------------------------------------------------------------
// validation

namespace {

void check_functions(const ConfigSection& e, const std::string& key, uint64_t max_n,
                     std::vector<Diagnostic>& diags, size_t* count = nullptr) {
  if (!e.has(key)) {
    diags.push_back({e.line, 1, "experiment '" + e.name + "': missing '" + key + "'"});
    return;
  }
  auto specs = split(e.get(key), ',');
  if (count) *count = specs.size();
  for (const auto& s : specs) {
    try {
      parse_function_spec(s);
    } catch (const SpecParseError& err) {
      diags.push_back({e.line_of(key), static_cast<int>(err.column),
                       "experiment '" + e.name + "': " + err.what()});
    } catch (const std::exception& err) {
      diags.push_back({e.line_of(key), 1, "experiment '" + e.name + "': " + err.what()});
    }
  }
  (void)max_n;
}

void check_shifts(const ConfigSection& e, uint64_t max_n, size_t expected,
                  std::vector<Diagnostic>& diags) {
  if (!e.has("shifts")) {
    diags.push_back({e.line, 1, "experiment '" + e.name + "': missing 'shifts'"});
    return;
  }
  auto parts = split(e.get("shifts"), ',');
  if (expected && parts.size() != expected)
    diags.push_back({e.line_of("shifts"), 1,
                     "experiment '" + e.name + "': expected " + std::to_string(expected) +
                         " shifts, got " + std::to_string(parts.size())});
  for (const auto& p : parts) {
    int64_t h;
    if (!parse_i64(p, h)) {
      diags.push_back({e.line_of("shifts"), 1, "experiment '" + e.name + "': bad shift '" + p + "'"});
      continue;
    }
    if (static_cast<uint64_t>(std::llabs(h)) > max_n / 2)
      diags.push_back({e.line_of("shifts"), 1,
                       "experiment '" + e.name + "': shift " + p + " exceeds max_n/2"});
  }
}

void check_grid(const ConfigSection& e, uint64_t max_n, std::vector<Diagnostic>& diags) {
  if (!e.has("grid")) {
    diags.push_back({e.line, 1, "experiment '" + e.name + "': missing 'grid'"});
    return;
  }
  ScaleGrid g;
  if (!parse_grid(e.get("grid"), g)) {
    diags.push_back({e.line_of("grid"), 1, "experiment '" + e.name + "': bad grid (x0:ratio:count)"});
    return;
  }
  if (g.max() > static_cast<double>(max_n) * (1 + 1e-9))
    diags.push_back({e.line_of("grid"), 1,
                     "experiment '" + e.name + "': grid extends past max_n"});
}

}  // namespace

std::vector<Diagnostic> ExperimentConfig::validate() const {
  std::vector<Diagnostic> diags;
  std::map<std::string, int> seen;
  for (const auto& e : experiments) {
    if (seen.count(e.name))
      diags.push_back({e.line, 1, "duplicate experiment name '" + e.name + "' (first at line " +
                                      std::to_string(seen[e.name]) + ")"});
    else
      seen[e.name] = e.line;

    std::string kind = e.get("kind");
    if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end()) {
      diags.push_back({e.line, 1, "experiment '" + e.name + "': unknown kind '" + kind + "'"});
      continue;
    }

    if (kind == "correlate" || kind == "isotopy_arch" || kind == "isotopy_nonarch" ||
        kind == "equidist") {
      size_t k = 0;
      check_functions(e, "functions", max_n, diags, &k);
      check_shifts(e, max_n, k, diags);
      check_grid(e, max_n, diags);
      if (kind == "isotopy_nonarch") {
        if (!e.has("chi"))
          diags.push_back({e.line, 1, "experiment '" + e.name + "': missing 'chi'"});
        else
          check_functions(e, "chi", max_n, diags);
      }
    } else if (kind == "fd_table") {
      size_t k = 0;
      check_functions(e, "functions", max_n, diags, &k);
      check_shifts(e, max_n, k, diags);
      for (const char* key : {"divisors", "a_values", "x"})
        if (!e.has(key))
          diags.push_back({e.line, 1, "experiment '" + e.name + "': missing '" + key + "'"});
    } else if (kind == "pretense") {
      check_functions(e, "f", max_n, diags);
      check_functions(e, "g", max_n, diags);
      check_grid(e, max_n, diags);
    } else if (kind == "fit") {
      check_functions(e, "g", max_n, diags);
      for (const char* key : {"qmax", "tmax", "x"})
        if (!e.has(key))
          diags.push_back({e.line, 1, "experiment '" + e.name + "': missing '" + key + "'"});
    } else if (kind == "race") {
      check_grid(e, max_n, diags);
    } else if (kind == "smooth") {
      check_grid(e, max_n, diags);
      RationalExponent r;
      if (!e.has("alpha") || !parse_rational(e.get("alpha"), r))
        diags.push_back({e.line_of("alpha"), 1, "experiment '" + e.name + "': bad alpha"});
      if (!e.has("beta") || !parse_rational(e.get("beta"), r))
        diags.push_back({e.line_of("beta"), 1, "experiment '" + e.name + "': bad beta"});
    } else if (kind == "patterns") {
      uint64_t k;
      if (!e.has("k") || !parse_u64(e.get("k"), k) || k < 1 || k > 64)
        diags.push_back({e.line_of("k"), 1, "experiment '" + e.name + "': bad k"});
      if (e.has("fn")) check_functions(e, "fn", max_n, diags);
      uint64_t N;
      if (!e.has("max") || !parse_u64(e.get("max"), N) || N > max_n)
        diags.push_back({e.line_of("max"), 1, "experiment '" + e.name + "': bad max"});
    } else if (kind == "straighten") {
      std::string variant = e.get("variant");
      if (variant != "dirichlet" && variant != "archimedean")
        diags.push_back({e.line, 1,
                         "experiment '" + e.name + "': variant must be dirichlet|archimedean"});
    } else if (kind == "compare_avgs") {
      std::string f = e.get("f", "capped_dilate");
      if (f != "one" && f != "capped_dilate" && f != "inv_log")
        diags.push_back({e.line_of("f"), 1,
                         "experiment '" + e.name + "': f must be one|capped_dilate|inv_log"});
      if (!e.has("x"))
        diags.push_back({e.line, 1, "experiment '" + e.name + "': missing 'x'"});
    } else if (kind == "three_point") {
      check_functions(e, "fn", max_n, diags);
      auto parts = split(e.get("shifts"), ',');
      if (parts.size() != 3)
        diags.push_back({e.line_of("shifts"), 1,
                         "experiment '" + e.name + "': three_point needs exactly 3 shifts"});
      if (!e.has("windows"))
        diags.push_back({e.line, 1, "experiment '" + e.name + "': missing 'windows'"});
    }
  }
  return diags;
}

// ---------------------------------------------------------------------------
// run

namespace {

struct Prepared {
  // consumers to register with the shared sweep (may be empty)
  std::vector<BlockConsumer*> consumers;
  // finalize computes results and writes outputs; throws on failure
  std::function<void(ExperimentStatus&)> finalize;
  // direct experiments (no sweep) run entirely in finalize
};

std::string csv_path(const std::string& dir, const std::string& name) {
  return dir + "/" + name + ".csv";
}
std::string json_path(const std::string& dir, const std::string& name) {
  return dir + "/" + name + ".json";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << content;
}

std::string series_csv(const CorrelationSeries& s) {
  std::string out = "scale,re,im,abs\n";
  for (size_t j = 0; j < s.scales.size(); ++j) {
    out += format_double(s.scales[j]) + "," + format_double(s.values[j].real()) + "," +
           format_double(s.values[j].imag()) + "," + format_double(std::abs(s.values[j])) + "\n";
  }
  return out;
}

std::vector<FunctionSpec> parse_spec_list(const std::string& text) {
  std::vector<FunctionSpec> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_function_spec(part));
  return out;
}

std::vector<int64_t> parse_i64_list(const std::string& text) {
  std::vector<int64_t> out;
  for (const auto& part : split(text, ',')) {
    int64_t v;
    if (!parse_i64(part, v)) throw std::runtime_error("bad integer '" + part + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) {
    double v;
    if (!parse_number(part, v)) throw std::runtime_error("bad number '" + part + "'");
    out.push_back(v);
  }
  return out;
}

json query_json(const CorrelationQuery& q) {
  json fns = json::array();
  for (const auto& f : q.functions) fns.push_back(f.label());
  return json{{"functions", fns},
              {"shifts", q.shifts},
              {"a", q.dilation},
              {"d", q.divisor},
              {"scheme", scheme_name(q.scheme)},
              {"grid", {{"x0", q.grid.x0}, {"ratio", q.grid.ratio}, {"count", q.grid.count}}}};
}

CorrelationQuery query_from_section(const ConfigSection& e) {
  CorrelationQuery q;
  q.functions = parse_spec_list(e.get("functions"));
  q.shifts = parse_i64_list(e.get("shifts"));
  if (e.has("a")) {
    int64_t a;
    if (!parse_i64(e.get("a"), a)) throw std::runtime_error("bad 'a'");
    q.dilation = a;
  }
  if (e.has("d")) {
    double d;
    if (!parse_number(e.get("d"), d)) throw std::runtime_error("bad 'd'");
    q.divisor = d;
  }
  q.scheme = scheme_from_name(e.get("scheme", "unweighted"));
  if (!parse_grid(e.get("grid"), q.grid)) throw std::runtime_error("bad grid");
  q.validate();
  return q;
}

}  // namespace

RunManifest run(const ExperimentConfig& config) {
  auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  {
    std::ostringstream hx;
    hx << std::hex << fnv1a64(config.source_text);
    manifest.config_hash = hx.str();
  }
  manifest.tool_version = kToolVersion;
  manifest.seed = config.seed;
  manifest.threads = resolve_threads(config.threads);

  std::filesystem::create_directories(config.output_dir);
  const std::string& dir = config.output_dir;

  SweepOptions sweep_opt;
  sweep_opt.segment = config.segment_size;
  sweep_opt.threads = config.threads;

  std::vector<ExperimentStatus> statuses(config.experiments.size());
  std::vector<Prepared> prepared(config.experiments.size());
  uint64_t extra_sweeps = 0;  // kinds that cannot share the main sweep

  // jobs owned here so they outlive the sweep
  std::vector<std::unique_ptr<CorrelationJob>> corr_jobs;
  std::vector<std::unique_ptr<EquidistJob>> equi_jobs;
  std::vector<std::unique_ptr<RaceJob>> race_jobs;
  std::vector<std::unique_ptr<SmoothJob>> smooth_jobs;
  std::vector<std::unique_ptr<CensusJob>> census_jobs;

  for (size_t i = 0; i < config.experiments.size(); ++i) {
    const ConfigSection& e = config.experiments[i];
    ExperimentStatus& st = statuses[i];
    st.name = e.name;
    st.kind = e.get("kind");
    Prepared& prep = prepared[i];

    try {
      if (st.kind == "correlate") {
        CorrelationQuery q = query_from_section(e);
        corr_jobs.push_back(std::make_unique<CorrelationJob>(q, q.grid.scales()));
        CorrelationJob* job = corr_jobs.back().get();
        prep.consumers.push_back(&job->consumer());
        prep.finalize = [job, q, &e, dir](ExperimentStatus& s) {
          CorrelationSeries series;
          double max_abs = 0;
          for (const auto& snap : job->snapshots()) {
            series.scales.push_back(snap.scale);
            series.values.push_back(snap.acc.count() ? snap.acc.value()
                                                     : std::complex<double>{0, 0});
            max_abs = std::max(max_abs, std::abs(series.values.back()));
          }
          std::string path = csv_path(dir, e.name);
          write_file(path, series_csv(series));
          s.outputs.push_back(path);
          json j{{"name", e.name}, {"kind", "correlate"}, {"query", query_json(q)},
                 {"max_abs", max_abs}};
          std::string jp = json_path(dir, e.name);
          write_file(jp, j.dump(2) + "\n");
          s.outputs.push_back(jp);
        };
      } else if (st.kind == "isotopy_arch") {
        CorrelationQuery q = query_from_section(e);
        double ratio = 2.0, t = 0.0;
        if (e.has("q")) parse_number(e.get("q"), ratio);
        if (e.has("t")) parse_number(e.get("t"), t);
        if (!(ratio > 0)) throw std::runtime_error("isotopy_arch: q > 0 required");
        std::vector<double> checkpoints;
        for (double X : q.grid.scales()) {
          checkpoints.push_back(X / ratio);
          checkpoints.push_back(X);
        }
        std::sort(checkpoints.begin(), checkpoints.end());
        corr_jobs.push_back(std::make_unique<CorrelationJob>(q, checkpoints));
        CorrelationJob* job = corr_jobs.back().get();
        prep.consumers.push_back(&job->consumer());
        auto grid_scales = q.grid.scales();
        double summary_eps = 0.01;
        if (e.has("epsilon")) parse_number(e.get("epsilon"), summary_eps);
        prep.finalize = [job, q, grid_scales, checkpoints, ratio, t, summary_eps, &e,
                         dir](ExperimentStatus& s) {
          auto snaps = job->snapshots();
          auto value_at = [&](double X) {
            size_t i = std::lower_bound(checkpoints.begin(), checkpoints.end(), X) -
                       checkpoints.begin();
            return snaps[i].acc.count() ? snaps[i].acc.value() : std::complex<double>{0, 0};
          };
          std::complex<double> twist{std::cos(t * std::log(ratio)),
                                     std::sin(t * std::log(ratio))};
          std::string out = "scale,residual\n";
          size_t exceed = 0;
          for (double X : grid_scales) {
            double r = std::abs(value_at(X) - twist * value_at(X / ratio));
            if (r > summary_eps) ++exceed;
            out += format_double(X) + "," + format_double(r) + "\n";
          }
          std::string path = csv_path(dir, e.name);
          write_file(path, out);
          s.outputs.push_back(path);
          json j{{"name", e.name},
                 {"kind", "isotopy_arch"},
                 {"query", query_json(q)},
                 {"q_ratio", ratio},
                 {"t", t},
                 {"epsilon", summary_eps},
                 {"fraction_exceeding", double(exceed) / grid_scales.size()}};
          std::string jp = json_path(dir, e.name);
          write_file(jp, j.dump(2) + "\n");
          s.outputs.push_back(jp);
        };
      } else if (st.kind == "isotopy_nonarch") {
        CorrelationQuery q = query_from_section(e);
        FunctionSpec chi_spec = parse_function_spec(e.get("chi"));
        if (chi_spec.kind() != FunctionSpec::Kind::Character)
          throw std::runtime_error("isotopy_nonarch: 'chi' must be char(q=..,index=..)");
        double parity = chi_spec.chi().parity();
        CorrelationQuery neg = q;
        neg.dilation = -q.dilation;
        corr_jobs.push_back(std::make_unique<CorrelationJob>(q, q.grid.scales()));
        CorrelationJob* plus = corr_jobs.back().get();
        corr_jobs.push_back(std::make_unique<CorrelationJob>(neg, q.grid.scales()));
        CorrelationJob* minus = corr_jobs.back().get();
        prep.consumers.push_back(&plus->consumer());
        prep.consumers.push_back(&minus->consumer());
        double summary_eps = 0.01;
        if (e.has("epsilon")) parse_number(e.get("epsilon"), summary_eps);
        prep.finalize = [plus, minus, q, parity, summary_eps, &e, dir](ExperimentStatus& s) {
          auto ps = plus->snapshots();
          auto ms = minus->snapshots();
          std::string out = "scale,residual\n";
          size_t exceed = 0;
          for (size_t j = 0; j < ps.size(); ++j) {
            std::complex<double> vp =
                ps[j].acc.count() ? ps[j].acc.value() : std::complex<double>{0, 0};
            std::complex<double> vm =
                ms[j].acc.count() ? ms[j].acc.value() : std::complex<double>{0, 0};
            double r = std::abs(vm - parity * vp);
            if (r > summary_eps) ++exceed;
            out += format_double(ps[j].scale) + "," + format_double(r) + "\n";
          }
          std::string path = csv_path(dir, e.name);
          write_file(path, out);
          s.outputs.push_back(path);
          json j{{"name", e.name},
                 {"kind", "isotopy_nonarch"},
                 {"query", query_json(q)},
                 {"chi_parity", parity},
                 {"epsilon", summary_eps},
                 {"fraction_exceeding", ps.empty() ? 0.0 : double(exceed) / ps.size()}};
          std::string jp = json_path(dir, e.name);
          write_file(jp, j.dump(2) + "\n");
          s.outputs.push_back(jp);
        };
      } else if (st.kind == "equidist") {
        CorrelationQuery q = query_from_section(e);
        Mollifier psi;
        double r0 = 0.1, r1 = 0.2;
        if (e.has("r0")) parse_number(e.get("r0"), r0);
        if (e.has("r1")) parse_number(e.get("r1"), r1);
        int harmonic = 1;
        if (e.has("harmonic")) {
          int64_t h;
          if (parse_i64(e.get("harmonic"), h)) harmonic = static_cast<int>(h);
        }
        psi.r0 = r0;
        psi.harmonic = harmonic;
        psi.radial = [r0, r1](double r) {
          if (r <= r0) return 0.0;
          if (r >= r1) return 1.0;
          return (r - r0) / (r1 - r0);
        };
        bool exact = e.get("mode", "exact") != "subsampled";
        if (exact) {
          equi_jobs.push_back(std::make_unique<EquidistJob>(q, psi, q.grid));
          EquidistJob* job = equi_jobs.back().get();
          prep.consumers.push_back(&job->consumer());
          prep.finalize = [job, &e, dir](ExperimentStatus& s) {
            EquidistributionSeries es = job->result();
            std::string out = "cutoff,re,im,abs,mode\n";
            for (size_t j = 0; j < es.cutoffs.size(); ++j)
              out += format_double(es.cutoffs[j]) + "," + format_double(es.stat[j].real()) + "," +
                     format_double(es.stat[j].imag()) + "," +
                     format_double(std::abs(es.stat[j])) + ",exact\n";
            std::string path = csv_path(dir, e.name);
            write_file(path, out);
            s.outputs.push_back(path);
          };
        } else {
          SweepOptions local = sweep_opt;
          prep.finalize = [q, psi, local, &e, dir, &extra_sweeps](ExperimentStatus& s) {
            ++extra_sweeps;
            EquidistributionSeries es = argument_equidistribution(q, psi, q.grid, false, local);
            std::string out = "cutoff,re,im,abs,mode\n";
            for (size_t j = 0; j < es.cutoffs.size(); ++j)
              out += format_double(es.cutoffs[j]) + "," + format_double(es.stat[j].real()) + "," +
                     format_double(es.stat[j].imag()) + "," +
                     format_double(std::abs(es.stat[j])) + ",subsampled\n";
            std::string path = csv_path(dir, e.name);
            write_file(path, out);
            s.outputs.push_back(path);
          };
        }
      } else if (st.kind == "fd_table") {
        std::vector<FunctionSpec> fns = parse_spec_list(e.get("functions"));
        std::vector<int64_t> shifts = parse_i64_list(e.get("shifts"));
        std::vector<double> divisors = parse_double_list(e.get("divisors"));
        std::vector<int64_t> a_values = parse_i64_list(e.get("a_values"));
        double X, t = 0;
        if (!parse_number(e.get("x"), X)) throw std::runtime_error("bad 'x'");
        if (e.has("t")) parse_number(e.get("t"), t);
        SweepOptions local = sweep_opt;
        prep.finalize = [fns, shifts, divisors, a_values, X, t, local, &e, dir,
                         &extra_sweeps](ExperimentStatus& s) {
          ++extra_sweeps;
          FdTable table = fd_table(fns, shifts, divisors, a_values, X, t, local);
          std::string out = "a,d,re,im,abs\n";
          for (size_t ai = 0; ai < table.a_values.size(); ++ai)
            for (size_t di = 0; di < table.divisors.size(); ++di) {
              auto v = table.fda[ai][di];
              out += std::to_string(table.a_values[ai]) + "," +
                     format_double(table.divisors[di]) + "," + format_double(v.real()) + "," +
                     format_double(v.imag()) + "," + format_double(std::abs(v)) + "\n";
            }
          std::string path = csv_path(dir, e.name);
          write_file(path, out);
          s.outputs.push_back(path);
          json diag = json::array();
          for (size_t ai = 0; ai < table.a_values.size(); ++ai)
            diag.push_back({{"a", table.a_values[ai]},
                            {"fhat_re", table.diag[ai].fhat.real()},
                            {"fhat_im", table.diag[ai].fhat.imag()},
                            {"residual", table.diag[ai].residual}});
          json j{{"x", X}, {"t_candidate", t}, {"per_a", diag}};
          std::string jp = json_path(dir, e.name);
          write_file(jp, j.dump(2) + "\n");
          s.outputs.push_back(jp);
        };
      } else if (st.kind == "pretense") {
        FunctionSpec f = parse_function_spec(e.get("f"));
        FunctionSpec g = parse_function_spec(e.get("g"));
        ScaleGrid grid;
        if (!parse_grid(e.get("grid"), grid)) throw std::runtime_error("bad grid");
        prep.finalize = [f, g, grid, &e, dir](ExperimentStatus& s) {
          PretenseProfile prof = weak_pretension_profile(f, g, grid);
          std::string out = "scale,dist_sq,normalized\n";
          for (size_t j = 0; j < prof.scales.size(); ++j)
            out += format_double(prof.scales[j]) + "," + format_double(prof.dist_sq[j]) + "," +
                   format_double(prof.normalized[j]) + "\n";
          std::string path = csv_path(dir, e.name);
          write_file(path, out);
          s.outputs.push_back(path);
          json j{{"verdict", prof.verdict}};
          std::string jp = json_path(dir, e.name);
          write_file(jp, j.dump(2) + "\n");
          s.outputs.push_back(jp);
        };
      } else if (st.kind == "fit") {
        FunctionSpec g = parse_function_spec(e.get("g"));
        double qmax, tmax, X;
        if (!parse_number(e.get("qmax"), qmax) || !parse_number(e.get("tmax"), tmax) ||
            !parse_number(e.get("x"), X))
          throw std::runtime_error("fit: bad qmax/tmax/x");
        int threads = config.threads;
        prep.finalize = [g, qmax, tmax, X, threads, &e, dir](ExperimentStatus& s) {
          TwistFit fit =
              fit_twisted_character(g, static_cast<uint32_t>(qmax), tmax, X,
                                    4'000'000'000ull, threads);
          json j{{"q", fit.q},         {"index", fit.index},   {"t", fit.t},
                 {"dist_sq", fit.dist_sq}, {"grid_delta", fit.grid_delta}, {"x", X}};
          std::string jp = json_path(dir, e.name);
          write_file(jp, j.dump(2) + "\n");
          s.outputs.push_back(jp);
        };
      } else if (st.kind == "race") {
        ScaleGrid grid;
        if (!parse_grid(e.get("grid"), grid)) throw std::runtime_error("bad grid");
        race_jobs.push_back(std::make_unique<RaceJob>(grid));
        RaceJob* job = race_jobs.back().get();
        prep.consumers.push_back(&job->consumer());
        prep.finalize = [job, &e, dir](ExperimentStatus& s) {
          RaceSeries rs = job->result();
          std::string out = "scale,freq,count\n";
          for (size_t j = 0; j < rs.scales.size(); ++j)
            out += format_double(rs.scales[j]) + "," + format_double(rs.freq[j]) + "," +
                   std::to_string(rs.counts[j]) + "\n";
          std::string path = csv_path(dir, e.name);
          write_file(path, out);
          s.outputs.push_back(path);
        };
      } else if (st.kind == "smooth") {
        ScaleGrid grid;
        if (!parse_grid(e.get("grid"), grid)) throw std::runtime_error("bad grid");
        RationalExponent alpha, beta;
        if (!parse_rational(e.get("alpha"), alpha) || !parse_rational(e.get("beta"), beta))
          throw std::runtime_error("smooth: bad alpha/beta");
        bool cutoff_mode = e.get("indicator", "exact") == "cutoff";
        smooth_jobs.push_back(std::make_unique<SmoothJob>(alpha, beta, grid));
        SmoothJob* job = smooth_jobs.back().get();
        prep.consumers.push_back(&job->consumer());
        prep.finalize = [job, cutoff_mode, &e, dir](ExperimentStatus& s) {
          SmoothSeries ss = job->result();
          std::string out = "scale,empirical,target,gap\n";
          for (size_t j = 0; j < ss.scales.size(); ++j) {
            double emp = cutoff_mode ? ss.empirical_cutoff[j] : ss.empirical[j];
            out += format_double(ss.scales[j]) + "," + format_double(emp) + "," +
                   format_double(ss.target) + "," + format_double(emp - ss.target) + "\n";
          }
          std::string path = csv_path(dir, e.name);
          write_file(path, out);
          s.outputs.push_back(path);
        };
      } else if (st.kind == "patterns") {
        uint64_t K, N;
        if (!parse_u64(e.get("k"), K)) throw std::runtime_error("bad k");
        if (!parse_u64(e.get("max"), N)) throw std::runtime_error("bad max");
        FunctionSpec fn = parse_function_spec(e.get("fn", "liouville"));
        census_jobs.push_back(
            std::make_unique<CensusJob>(static_cast<uint32_t>(K), N, fn));
        CensusJob* job = census_jobs.back().get();
        prep.consumers.push_back(&job->consumer());
        prep.finalize = [job, &e, dir](ExperimentStatus& s) {
          PatternCensus c = job->result();
          std::string out = "pattern,count,density_unweighted,density_log\n";
          for (const auto& [code, f] : c.frequencies) {
            std::string pat;
            for (uint32_t sym : c.decode(code)) pat += std::to_string(sym);
            out += pat + "," + std::to_string(f.count) + "," +
                   format_double(f.density_unweighted) + "," + format_double(f.density_log) +
                   "\n";
          }
          std::string path = csv_path(dir, e.name);
          write_file(path, out);
          s.outputs.push_back(path);
          json j{{"k", c.K},
                 {"n", c.N},
                 {"alphabet", c.alphabet},
                 {"distinct", c.distinct},
                 {"windows", c.windows},
                 {"frequencies_kept", c.frequencies_kept}};
          std::string jp = json_path(dir, e.name);
          write_file(jp, j.dump(2) + "\n");
          s.outputs.push_back(jp);
        };
      } else if (st.kind == "straighten") {
        std::string variant = e.get("variant");
        uint64_t seed = config.seed;
        if (e.has("seed")) parse_u64(e.get("seed"), seed);
        double noise = 0.0;
        if (e.has("noise")) parse_number(e.get("noise"), noise);
        if (variant == "dirichlet") {
          uint64_t q = 12;
          if (e.has("q")) parse_u64(e.get("q"), q);
          prep.finalize = [q, noise, seed, &e, dir](ExperimentStatus& s) {
            auto chars = DirichletCharacter::enumerate(static_cast<uint32_t>(q));
            Rng rng(seed);
            size_t pick = chars.size() > 1 ? 1 : 0;
            const DirichletCharacter& chi = chars[pick];
            UnitGroupQuasimorphism psi;
            psi.q = static_cast<uint32_t>(q);
            psi.values.assign(q, 0.0);
            for (uint32_t r = 0; r < q; ++r) {
              auto v = chi.value_at_residue(r);
              if (std::abs(v) > 0.5) {
                double d = rng.uniform(-noise / 2, noise / 2);
                psi.values[r] = v * std::complex<double>{std::cos(d), std::sin(d)};
              }
            }
            if (q == 1) psi.values[0] = 1.0;
            DirichletSnap snap = snap_to_dirichlet(psi, std::max(noise, 1e-12));
            json j{{"variant", "dirichlet"},
                   {"q", q},
                   {"noise", noise},
                   {"seed", seed},
                   {"planted_index", pick},
                   {"recovered_same_character", snap.chi.same_values(chi)},
                   {"sup_error", snap.sup_error}};
            std::string jp = json_path(dir, e.name);
            write_file(jp, j.dump(2) + "\n");
            s.outputs.push_back(jp);
          };
        } else {
          double t0 = 1.5, xmax = 1000.0;
          if (e.has("t0")) parse_number(e.get("t0"), t0);
          if (e.has("xmax")) parse_number(e.get("xmax"), xmax);
          prep.finalize = [t0, xmax, noise, seed, &e, dir](ExperimentStatus& s) {
            Rng rng(seed);
            uint64_t salt = rng.next_u64();
            PositiveRealQuasimorphism alpha;
            alpha.eps = std::max(noise, 1e-6);
            alpha.sampler = [t0, noise, salt](double x) {
              Rng h(salt ^ fnv1a64(std::to_string(static_cast<int64_t>(x * 1e9))));
              double d = noise > 0 ? h.uniform(-noise, noise) : 0.0;
              double ang = -t0 * std::log(x) + d;
              return std::complex<double>{std::cos(ang), std::sin(ang)};
            };
            ArchimedeanSnap snap = snap_to_archimedean(alpha, xmax, 100.0);
            json j{{"variant", "archimedean"}, {"t0", t0},
                   {"noise", noise},           {"seed", seed},
                   {"t_recovered", snap.t},    {"t_error", std::abs(snap.t - t0)},
                   {"sup_error", snap.sup_error}};
            std::string jp = json_path(dir, e.name);
            write_file(jp, j.dump(2) + "\n");
            s.outputs.push_back(jp);
          };
        }
      } else if (st.kind == "compare_avgs") {
        std::string fname = e.get("f", "capped_dilate");
        double X;
        if (!parse_number(e.get("x"), X)) throw std::runtime_error("bad 'x'");
        uint64_t a = 1;
        if (e.has("a")) parse_u64(e.get("a"), a);
        prep.finalize = [fname, X, a, &e, dir](ExperimentStatus& s) {
          auto f = [&fname](uint64_t d) -> std::complex<double> {
            double x = static_cast<double>(d);
            if (fname == "one") return 1.0;
            if (fname == "inv_log") return 1.0 / (1.0 + std::log(x));
            // capped_dilate: d^{i} / |1+i|
            double ang = std::log(x);
            return std::complex<double>{std::cos(ang), std::sin(ang)} / std::sqrt(2.0);
          };
          AverageComparison cmp = compare_integer_prime_averages(f, a, X);
          json j{{"f", fname},
                 {"a", a},
                 {"x", X},
                 {"loglog_integers_re", cmp.loglog_integers.real()},
                 {"loglog_integers_im", cmp.loglog_integers.imag()},
                 {"log_primes_re", cmp.log_primes.real()},
                 {"log_primes_im", cmp.log_primes.imag()},
                 {"gap", cmp.gap}};
          std::string jp = json_path(dir, e.name);
          write_file(jp, j.dump(2) + "\n");
          s.outputs.push_back(jp);
        };
      } else if (st.kind == "three_point") {
        FunctionSpec fn = parse_function_spec(e.get("fn"));
        std::vector<int64_t> shifts = parse_i64_list(e.get("shifts"));
        if (shifts.size() != 3) throw std::runtime_error("three_point: need 3 shifts");
        if (shifts[0] == shifts[1] || shifts[0] == shifts[2] || shifts[1] == shifts[2])
          throw std::runtime_error("three_point: shifts must be distinct");
        std::vector<std::pair<double, double>> windows;
        std::vector<double> checkpoints;
        for (const auto& w : split(e.get("windows"), ',')) {
          auto parts = split(w, ':');
          if (parts.size() != 2) throw std::runtime_error("bad window '" + w + "' (x:omega)");
          double x, om;
          if (!parse_number(parts[0], x) || !parse_number(parts[1], om))
            throw std::runtime_error("bad window numbers");
          if (!(om > 1) || x / om < 1) throw std::runtime_error("bad window geometry");
          windows.emplace_back(x, om);
          checkpoints.push_back(x / om);
          checkpoints.push_back(x);
        }
        std::sort(checkpoints.begin(), checkpoints.end());
        CorrelationQuery q;
        q.functions = {fn, fn, fn};
        q.shifts = shifts;
        q.scheme = WeightScheme::Log;
        corr_jobs.push_back(std::make_unique<CorrelationJob>(q, checkpoints));
        CorrelationJob* job = corr_jobs.back().get();
        prep.consumers.push_back(&job->consumer());
        prep.finalize = [job, windows, checkpoints, &e, dir](ExperimentStatus& s) {
          auto snaps = job->snapshots();
          auto snap_at = [&](double X) -> const WeightedAccumulator& {
            size_t i = std::lower_bound(checkpoints.begin(), checkpoints.end(), X) -
                       checkpoints.begin();
            return snaps[i].acc;
          };
          std::string out = "x,omega,re,im,abs\n";
          for (auto [x, om] : windows) {
            WeightedAccumulator diff = snap_at(x).minus(snap_at(x / om));
            std::complex<double> v =
                diff.count() ? diff.value() : std::complex<double>{0, 0};
            out += format_double(x) + "," + format_double(om) + "," +
                   format_double(v.real()) + "," + format_double(v.imag()) + "," +
                   format_double(std::abs(v)) + "\n";
          }
          std::string path = csv_path(dir, e.name);
          write_file(path, out);
          s.outputs.push_back(path);
        };
      } else {
        throw std::runtime_error("unknown kind '" + st.kind + "'");
      }
    } catch (const std::exception& err) {
      st.ok = false;
      st.error = err.what();
      prep.finalize = nullptr;
      prep.consumers.clear();
    }
  }

  // one shared sweep for every block consumer
  std::vector<BlockConsumer*> all_consumers;
  std::vector<size_t> consumer_owner;
  for (size_t i = 0; i < prepared.size(); ++i)
    for (BlockConsumer* c : prepared[i].consumers) {
      all_consumers.push_back(c);
      consumer_owner.push_back(i);
    }
  if (!all_consumers.empty()) {
    SweepReport rep = run_sweep(all_consumers, sweep_opt);
    manifest.sieve_sweeps = 1;
    manifest.values_sieved = rep.stats.values_sieved;
    manifest.sieve_seconds = rep.stats.seconds;
    manifest.sieve_throughput = rep.stats.throughput();
    for (size_t ci = 0; ci < all_consumers.size(); ++ci) {
      if (!rep.consumer_errors[ci].empty()) {
        size_t owner = consumer_owner[ci];
        statuses[owner].error = rep.consumer_errors[ci];
        prepared[owner].finalize = nullptr;  // fault isolation
      }
    }
  }

  // finalize everything; one failing experiment must not abort the others
  for (size_t i = 0; i < prepared.size(); ++i) {
    if (!statuses[i].error.empty()) continue;
    if (!prepared[i].finalize) continue;
    try {
      prepared[i].finalize(statuses[i]);
      statuses[i].ok = true;
    } catch (const std::exception& err) {
      statuses[i].ok = false;
      statuses[i].error = err.what();
    }
  }
  manifest.sieve_sweeps += extra_sweeps;

  manifest.experiments = statuses;
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest.save(dir + "/manifest.json");
  return manifest;
}

std::string RunManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  j["threads"] = threads;
  j["sieve_sweeps"] = sieve_sweeps;
  j["values_sieved"] = values_sieved;
  j["sieve_seconds"] = sieve_seconds;
  j["sieve_throughput_per_s"] = sieve_throughput;
  j["wall_seconds"] = wall_seconds;
  j["experiments"] = json::array();
  for (const auto& e : experiments) {
    json je{{"name", e.name}, {"kind", e.kind}, {"ok", e.ok}, {"outputs", e.outputs}};
    if (!e.error.empty()) je["error"] = e.error;
    j["experiments"].push_back(je);
  }
  return j.dump(2) + "\n";
}

void RunManifest::save(const std::string& path) const { write_file(path, to_json()); }

}  // namespace chowla
