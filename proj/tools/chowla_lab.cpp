// chowla-lab: batch experiment runner and direct subcommands for the
// correlation laboratory.  Exit codes: 0 ok, 1 config diagnostics, 2
// runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "chowla/correlation.hpp"
#include "chowla/io.hpp"
#include "chowla/patterns.hpp"
#include "chowla/pretense.hpp"
#include "chowla/rng.hpp"
#include "chowla/runner.hpp"
#include "chowla/smoothness.hpp"
#include "chowla/straightening.hpp"

using namespace chowla;
using nlohmann::json;

namespace {

int cmd_run(const std::string& path, bool validate_only) {
  std::vector<Diagnostic> diags;
  ExperimentConfig cfg = ExperimentConfig::parse_file(path, diags);
  auto sem = cfg.validate();
  diags.insert(diags.end(), sem.begin(), sem.end());
  if (!diags.empty()) {
    for (const auto& d : diags) std::cerr << path << ": " << d.to_string() << "\n";
    return 1;
  }
  if (validate_only) {
    std::cout << "config ok: " << cfg.experiments.size() << " experiment(s)\n";
    return 0;
  }
  RunManifest m = run(cfg);
  std::cout << m.to_json();
  bool all_ok = true;
  for (const auto& e : m.experiments) all_ok = all_ok && e.ok;
  return all_ok ? 0 : 2;
}

ScaleGrid grid_up_to(double max_x, double x0 = 1000.0) {
  if (max_x < x0 * 2) x0 = std::max(2.0, max_x / 8);
  return ScaleGrid::up_to(x0, max_x);
}

std::vector<std::string> split_top(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<FunctionSpec> parse_specs(const std::string& text) {
  std::vector<FunctionSpec> out;
  for (const auto& part : split_top(text, ',')) out.push_back(parse_function_spec(part));
  return out;
}

std::vector<int64_t> parse_shift_list(const std::string& text) {
  std::vector<int64_t> out;
  for (const auto& part : split_top(text, ',')) out.push_back(std::stoll(part));
  return out;
}

std::vector<double> parse_num_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split_top(text, ',')) out.push_back(std::stod(part));
  return out;
}

void print_series_csv(const CorrelationSeries& s) {
  std::printf("scale,re,im,abs\n");
  for (size_t j = 0; j < s.scales.size(); ++j)
    std::printf("%s,%s,%s,%s\n", format_double(s.scales[j]).c_str(),
                format_double(s.values[j].real()).c_str(),
                format_double(s.values[j].imag()).c_str(),
                format_double(std::abs(s.values[j])).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chowla-lab: sieve-backed correlations of bounded multiplicative functions"};
  app.require_subcommand(1);

  // run / validate
  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "run a batch experiment config");
  run_cmd->add_option("config", config_path, "config file")->required();
  auto* val_cmd = app.add_subcommand("validate", "validate a config and list all diagnostics");
  val_cmd->add_option("config", config_path, "config file")->required();

  // correlate
  std::string fn_list = "liouville, liouville", shift_list = "0, 1", scheme_name_s = "unweighted";
  double corr_max = 1e6, corr_d = 1.0;
  int64_t corr_a = 1;
  auto* corr_cmd = app.add_subcommand("correlate", "multi-scale correlation series");
  corr_cmd->add_option("--fn", fn_list, "comma-separated function specs");
  corr_cmd->add_option("--shifts", shift_list, "comma-separated shifts");
  corr_cmd->add_option("--a", corr_a, "dilation a");
  corr_cmd->add_option("--d", corr_d, "divisor d");
  corr_cmd->add_option("--scheme", scheme_name_s, "unweighted|log|loglog|prime|prime_log");
  corr_cmd->add_option("--max", corr_max, "largest scale");

  // average: multi-scale weighted averages of one function
  std::string avg_fn = "liouville", avg_scheme = "unweighted";
  double avg_max = 1e6;
  auto* avg_cmd = app.add_subcommand("average", "multi-scale average of a single function");
  avg_cmd->add_option("--fn", avg_fn, "function spec");
  avg_cmd->add_option("--scheme", avg_scheme, "unweighted|log|loglog|prime|prime_log");
  avg_cmd->add_option("--max", avg_max, "largest scale");

  // pretense / fit
  std::string pre_f = "liouville", pre_g = "one";
  double pre_max = 1e6;
  auto* pre_cmd = app.add_subcommand("pretense", "pretentious-distance profile");
  pre_cmd->add_option("--f", pre_f, "function spec");
  pre_cmd->add_option("--g", pre_g, "function spec");
  pre_cmd->add_option("--scales", pre_max, "largest scale");

  uint32_t fit_qmax = 8;
  double fit_tmax = 5.0, fit_x = 1e5;
  std::string fit_g = "liouville";
  auto* fit_cmd = app.add_subcommand("fit", "best twisted-character fit");
  fit_cmd->add_option("--g", fit_g, "function spec");
  fit_cmd->add_option("--qmax", fit_qmax, "largest modulus");
  fit_cmd->add_option("--tmax", fit_tmax, "t window");
  fit_cmd->add_option("--scale", fit_x, "scale X");

  // race / smooth / patterns
  double race_max = 1e7;
  auto* race_cmd = app.add_subcommand("race", "largest-prime-factor race");
  race_cmd->add_option("--max", race_max, "largest scale");

  std::string sm_alpha = "1/2", sm_beta = "1/2";
  double sm_max = 1e7;
  auto* sm_cmd = app.add_subcommand("smooth", "joint smooth-number density");
  sm_cmd->add_option("--alpha", sm_alpha, "rational in (0,1), e.g. 1/2");
  sm_cmd->add_option("--beta", sm_beta, "rational in (0,1)");
  sm_cmd->add_option("--max", sm_max, "largest scale");

  uint32_t pat_k = 3;
  double pat_max = 1e7;
  std::string pat_fn = "liouville", pat_klist;
  auto* pat_cmd = app.add_subcommand("patterns", "value-pattern census");
  pat_cmd->add_option("--k", pat_k, "pattern length");
  pat_cmd->add_option("--max", pat_max, "scan bound N");
  pat_cmd->add_option("--fn", pat_fn, "liouville|mobius|lambda_q(q)");
  pat_cmd->add_option("--growth", pat_klist, "comma-separated K list: emit a JSON growth report");

  // direct wrappers for the remaining experiment kinds
  std::string fd_fns = "liouville, liouville", fd_shifts = "0, 1", fd_divs = "1, 2, 4, 8",
              fd_as = "1";
  double fd_x = 1e6, fd_t = 0.0;
  auto* fd_cmd = app.add_subcommand("fd-table", "finite-scale f_d(a) table with fit diagnostic");
  fd_cmd->add_option("--fn", fd_fns, "function specs");
  fd_cmd->add_option("--shifts", fd_shifts, "shifts");
  fd_cmd->add_option("--divisors", fd_divs, "divisor list");
  fd_cmd->add_option("--a", fd_as, "a list");
  fd_cmd->add_option("--x", fd_x, "scale X");
  fd_cmd->add_option("--t", fd_t, "candidate t for the diagnostic");

  std::string ia_fns = "archimedean(t=1.5)", ia_shifts = "0";
  double ia_q = 2.0, ia_t = 1.5, ia_max = 1e6;
  auto* ia_cmd = app.add_subcommand("isotopy-arch", "archimedean isotopy residual series");
  ia_cmd->add_option("--fn", ia_fns, "function specs");
  ia_cmd->add_option("--shifts", ia_shifts, "shifts");
  ia_cmd->add_option("--q", ia_q, "scale ratio q");
  ia_cmd->add_option("--t", ia_t, "twist exponent t");
  ia_cmd->add_option("--max", ia_max, "largest scale");

  std::string in_fns = "liouville, liouville", in_shifts = "0, 1", in_chi = "char(q=3,index=1)";
  double in_max = 1e6;
  int64_t in_a = 1;
  auto* in_cmd = app.add_subcommand("isotopy-nonarch", "non-archimedean isotopy residual series");
  in_cmd->add_option("--fn", in_fns, "function specs");
  in_cmd->add_option("--shifts", in_shifts, "shifts");
  in_cmd->add_option("--chi", in_chi, "character spec");
  in_cmd->add_option("--a", in_a, "dilation a");
  in_cmd->add_option("--max", in_max, "largest scale");

  std::string eq_fns = "archimedean(t=2.0)", eq_shifts = "0";
  double eq_max = 1e5, eq_r0 = 0.1, eq_r1 = 0.2;
  int eq_harm = 1;
  bool eq_subsampled = false;
  auto* eq_cmd = app.add_subcommand("equidist", "argument equidistribution statistic");
  eq_cmd->add_option("--fn", eq_fns, "function specs");
  eq_cmd->add_option("--shifts", eq_shifts, "shifts");
  eq_cmd->add_option("--max", eq_max, "largest cutoff");
  eq_cmd->add_option("--r0", eq_r0, "mollifier vanishes on |z| <= r0");
  eq_cmd->add_option("--r1", eq_r1, "radial ramp reaches 1 at r1");
  eq_cmd->add_option("--harmonic", eq_harm, "angular harmonic k");
  eq_cmd->add_flag("--subsampled", eq_subsampled, "geometric subsampling instead of all scales");

  std::string ca_f = "capped_dilate";
  double ca_x = 1e5;
  uint64_t ca_a = 1;
  auto* ca_cmd = app.add_subcommand("compare-avgs", "integer loglog vs prime log averages");
  ca_cmd->add_option("--f", ca_f, "one|capped_dilate|inv_log");
  ca_cmd->add_option("--a", ca_a, "dilation a");
  ca_cmd->add_option("--x", ca_x, "scale X");

  std::string tp_fn = "lambda_q(3)", tp_shifts = "0, 1, 3", tp_windows = "1e6:1e2";
  auto* tp_cmd = app.add_subcommand("three-point", "windowed three-point correlations");
  tp_cmd->add_option("--fn", tp_fn, "function spec");
  tp_cmd->add_option("--shifts", tp_shifts, "three distinct shifts");
  tp_cmd->add_option("--windows", tp_windows, "comma-separated x:omega windows");

  // straighten
  auto* str_cmd = app.add_subcommand("straighten", "quasimorphism straightening");
  uint32_t str_q = 12;
  double str_noise = 0.03, str_t0 = 1.5, str_xmax = 1000.0;
  uint64_t str_seed = 1;
  auto* str_dir = str_cmd->add_subcommand("dirichlet", "snap to a Dirichlet character");
  str_dir->add_option("--q", str_q, "modulus");
  str_dir->add_option("--noise", str_noise, "perturbation size eps");
  str_dir->add_option("--seed", str_seed, "rng seed");
  auto* str_arch = str_cmd->add_subcommand("archimedean", "snap to x^{-it}");
  str_arch->add_option("--t0", str_t0, "planted t");
  str_arch->add_option("--noise", str_noise, "perturbation size eps");
  str_arch->add_option("--seed", str_seed, "rng seed");
  str_arch->add_option("--xmax", str_xmax, "grid extent");
  str_cmd->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(config_path, false);
    if (*val_cmd) return cmd_run(config_path, true);

    if (*corr_cmd) {
      CorrelationQuery q;
      q.functions = parse_specs(fn_list);
      q.shifts = parse_shift_list(shift_list);
      q.dilation = corr_a;
      q.divisor = corr_d;
      q.scheme = scheme_from_name(scheme_name_s);
      q.grid = grid_up_to(corr_max);
      print_series_csv(correlate(q));
      return 0;
    }

    if (*fd_cmd) {
      std::vector<int64_t> a_vals = parse_shift_list(fd_as);
      FdTable t = fd_table(parse_specs(fd_fns), parse_shift_list(fd_shifts),
                           parse_num_list(fd_divs), a_vals, fd_x, fd_t);
      std::printf("a,d,re,im,abs\n");
      for (size_t ai = 0; ai < t.a_values.size(); ++ai)
        for (size_t di = 0; di < t.divisors.size(); ++di) {
          auto v = t.fda[ai][di];
          std::printf("%lld,%s,%s,%s,%s\n", static_cast<long long>(t.a_values[ai]),
                      format_double(t.divisors[di]).c_str(), format_double(v.real()).c_str(),
                      format_double(v.imag()).c_str(), format_double(std::abs(v)).c_str());
        }
      for (size_t ai = 0; ai < t.a_values.size(); ++ai)
        std::fprintf(stderr, "a=%lld: fhat=(%g,%g) loglog residual %g at t=%g\n",
                     static_cast<long long>(t.a_values[ai]), t.diag[ai].fhat.real(),
                     t.diag[ai].fhat.imag(), t.diag[ai].residual, t.t_candidate);
      return 0;
    }

    if (*ia_cmd) {
      CorrelationQuery q;
      q.functions = parse_specs(ia_fns);
      q.shifts = parse_shift_list(ia_shifts);
      q.grid = grid_up_to(ia_max);
      ResidualSeries r = archimedean_isotopy_residual(q, ia_q, ia_t);
      std::printf("scale,residual\n");
      for (size_t j = 0; j < r.scales.size(); ++j)
        std::printf("%s,%s\n", format_double(r.scales[j]).c_str(),
                    format_double(r.residuals[j]).c_str());
      return 0;
    }

    if (*in_cmd) {
      CorrelationQuery q;
      q.functions = parse_specs(in_fns);
      q.shifts = parse_shift_list(in_shifts);
      q.dilation = in_a;
      q.grid = grid_up_to(in_max);
      FunctionSpec chi = parse_function_spec(in_chi);
      if (chi.kind() != FunctionSpec::Kind::Character)
        throw std::runtime_error("--chi must be char(q=..,index=..)");
      ResidualSeries r = nonarch_isotopy_residual(q, chi.chi());
      std::printf("scale,residual\n");
      for (size_t j = 0; j < r.scales.size(); ++j)
        std::printf("%s,%s\n", format_double(r.scales[j]).c_str(),
                    format_double(r.residuals[j]).c_str());
      return 0;
    }

    if (*eq_cmd) {
      CorrelationQuery q;
      q.functions = parse_specs(eq_fns);
      q.shifts = parse_shift_list(eq_shifts);
      q.grid = grid_up_to(eq_max);
      Mollifier psi;
      psi.r0 = eq_r0;
      psi.harmonic = eq_harm;
      double r0 = eq_r0, r1 = eq_r1;
      psi.radial = [r0, r1](double r) {
        if (r <= r0) return 0.0;
        if (r >= r1) return 1.0;
        return (r - r0) / (r1 - r0);
      };
      EquidistributionSeries es = argument_equidistribution(q, psi, q.grid, !eq_subsampled);
      std::printf("cutoff,re,im,abs,mode\n");
      for (size_t j = 0; j < es.cutoffs.size(); ++j)
        std::printf("%s,%s,%s,%s,%s\n", format_double(es.cutoffs[j]).c_str(),
                    format_double(es.stat[j].real()).c_str(),
                    format_double(es.stat[j].imag()).c_str(),
                    format_double(std::abs(es.stat[j])).c_str(),
                    es.exact_all_scales ? "exact" : "subsampled");
      return 0;
    }

    if (*ca_cmd) {
      std::string fname = ca_f;
      auto f = [&fname](uint64_t d) -> std::complex<double> {
        double x = static_cast<double>(d);
        if (fname == "one") return 1.0;
        if (fname == "inv_log") return 1.0 / (1.0 + std::log(x));
        double ang = std::log(x);
        return std::complex<double>{std::cos(ang), std::sin(ang)} / std::sqrt(2.0);
      };
      AverageComparison cmp = compare_integer_prime_averages(f, ca_a, ca_x);
      json j{{"f", fname},
             {"a", ca_a},
             {"x", ca_x},
             {"loglog_integers_re", cmp.loglog_integers.real()},
             {"loglog_integers_im", cmp.loglog_integers.imag()},
             {"log_primes_re", cmp.log_primes.real()},
             {"log_primes_im", cmp.log_primes.imag()},
             {"gap", cmp.gap}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*tp_cmd) {
      std::vector<int64_t> sh = parse_shift_list(tp_shifts);
      if (sh.size() != 3) throw std::runtime_error("--shifts needs exactly 3 entries");
      std::vector<std::pair<double, double>> windows;
      for (const auto& w : split_top(tp_windows, ',')) {
        auto parts = split_top(w, ':');
        if (parts.size() != 2) throw std::runtime_error("window format is x:omega");
        windows.emplace_back(std::stod(parts[0]), std::stod(parts[1]));
      }
      auto rows = three_point_bound_check(parse_function_spec(tp_fn), sh[0], sh[1], sh[2],
                                          windows);
      std::printf("x,omega,re,im,abs\n");
      for (const auto& r : rows)
        std::printf("%s,%s,%s,%s,%s\n", format_double(r.x).c_str(),
                    format_double(r.omega).c_str(), format_double(r.value.real()).c_str(),
                    format_double(r.value.imag()).c_str(),
                    format_double(r.magnitude).c_str());
      return 0;
    }

    if (*avg_cmd) {
      CorrelationQuery q;
      q.functions = {parse_function_spec(avg_fn)};
      q.shifts = {0};
      q.scheme = scheme_from_name(avg_scheme);
      q.grid = grid_up_to(avg_max);
      CorrelationSeries s = correlate(q);
      std::printf("scale,scheme,re,im,abs,count,den\n");
      for (size_t j = 0; j < s.scales.size(); ++j)
        std::printf("%s,%s,%s,%s,%s,%llu,%s\n", format_double(s.scales[j]).c_str(),
                    avg_scheme.c_str(), format_double(s.values[j].real()).c_str(),
                    format_double(s.values[j].imag()).c_str(),
                    format_double(std::abs(s.values[j])).c_str(),
                    static_cast<unsigned long long>(s.counts[j]),
                    format_double(s.dens[j]).c_str());
      return 0;
    }

    if (*pre_cmd) {
      PretenseProfile prof = weak_pretension_profile(parse_function_spec(pre_f),
                                                     parse_function_spec(pre_g),
                                                     grid_up_to(pre_max, 100.0));
      std::printf("scale,dist_sq,normalized\n");
      for (size_t j = 0; j < prof.scales.size(); ++j)
        std::printf("%s,%s,%s\n", format_double(prof.scales[j]).c_str(),
                    format_double(prof.dist_sq[j]).c_str(),
                    format_double(prof.normalized[j]).c_str());
      std::fprintf(stderr, "verdict: %s\n", prof.verdict.c_str());
      return 0;
    }

    if (*fit_cmd) {
      TwistFit fit = fit_twisted_character(parse_function_spec(fit_g), fit_qmax, fit_tmax, fit_x);
      json j{{"q", fit.q},
             {"index", fit.index},
             {"t", fit.t},
             {"dist_sq", fit.dist_sq},
             {"grid_delta", fit.grid_delta}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (*race_cmd) {
      RaceSeries rs = lpf_race(grid_up_to(race_max));
      std::printf("scale,freq,count\n");
      for (size_t j = 0; j < rs.scales.size(); ++j)
        std::printf("%s,%s,%llu\n", format_double(rs.scales[j]).c_str(),
                    format_double(rs.freq[j]).c_str(),
                    static_cast<unsigned long long>(rs.counts[j]));
      return 0;
    }

    if (*sm_cmd) {
      auto parse_rat = [](const std::string& s) {
        RationalExponent r;
        auto slash = s.find('/');
        if (slash == std::string::npos) throw std::runtime_error("rational like 1/2 expected");
        r.num = std::stoull(s.substr(0, slash));
        r.den = std::stoull(s.substr(slash + 1));
        return r;
      };
      SmoothSeries ss = joint_smooth_density(parse_rat(sm_alpha), parse_rat(sm_beta),
                                             grid_up_to(sm_max));
      std::printf("scale,empirical,target,gap\n");
      for (size_t j = 0; j < ss.scales.size(); ++j)
        std::printf("%s,%s,%s,%s\n", format_double(ss.scales[j]).c_str(),
                    format_double(ss.empirical[j]).c_str(), format_double(ss.target).c_str(),
                    format_double(ss.gap[j]).c_str());
      return 0;
    }

    if (*pat_cmd) {
      if (!pat_klist.empty()) {
        std::vector<uint32_t> ks;
        for (double v : parse_num_list(pat_klist)) ks.push_back(static_cast<uint32_t>(v));
        auto rows = growth_report(ks, static_cast<uint64_t>(pat_max),
                                  parse_function_spec(pat_fn));
        json out = json::array();
        for (const auto& r : rows)
          out.push_back({{"k", r.K},
                         {"s", r.s},
                         {"k_plus_5", r.k_plus_5},
                         {"k_squared", r.k_squared},
                         {"hyp_eps_half", r.hyp_half},
                         {"hyp_eps_one", r.hyp_one},
                         {"below_cited_lower_bound", r.below_cited_lower_bound}});
        std::cout << out.dump(2) << "\n";
        return 0;
      }
      PatternCensus c = census(pat_k, static_cast<uint64_t>(pat_max),
                               parse_function_spec(pat_fn));
      std::printf("pattern,count,density_unweighted,density_log\n");
      for (const auto& [code, f] : c.frequencies) {
        std::string pat;
        for (uint32_t sym : c.decode(code)) pat += std::to_string(sym);
        std::printf("%s,%llu,%s,%s\n", pat.c_str(), static_cast<unsigned long long>(f.count),
                    format_double(f.density_unweighted).c_str(),
                    format_double(f.density_log).c_str());
      }
      std::fprintf(stderr, "distinct: %llu of %llu windows\n",
                   static_cast<unsigned long long>(c.distinct),
                   static_cast<unsigned long long>(c.windows));
      return 0;
    }

    if (*str_cmd) {
      if (*str_dir) {
        auto chars = DirichletCharacter::enumerate(str_q);
        size_t pick = chars.size() > 1 ? 1 : 0;
        const DirichletCharacter& chi = chars[pick];
        Rng rng(str_seed);
        UnitGroupQuasimorphism psi;
        psi.q = str_q;
        psi.values.assign(str_q, 0.0);
        for (uint32_t r = 0; r < str_q; ++r) {
          auto v = chi.value_at_residue(r);
          if (std::abs(v) > 0.5) {
            double d = rng.uniform(-str_noise / 2, str_noise / 2);
            psi.values[r] = v * std::complex<double>{std::cos(d), std::sin(d)};
          }
        }
        if (str_q == 1) psi.values[0] = 1.0;
        DirichletSnap snap = snap_to_dirichlet(psi, std::max(str_noise, 1e-12));
        json j{{"q", str_q},
               {"noise", str_noise},
               {"seed", str_seed},
               {"planted_index", pick},
               {"recovered_same_character", snap.chi.same_values(chi)},
               {"sup_error", snap.sup_error}};
        std::cout << j.dump(2) << "\n";
      } else {
        Rng rng(str_seed);
        uint64_t salt = rng.next_u64();
        double noise = str_noise, t0 = str_t0;
        PositiveRealQuasimorphism alpha;
        alpha.eps = std::max(noise, 1e-6);
        alpha.sampler = [t0, noise, salt](double x) {
          Rng h(salt ^ fnv1a64(std::to_string(static_cast<int64_t>(x * 1e9))));
          double d = noise > 0 ? h.uniform(-noise, noise) : 0.0;
          double ang = -t0 * std::log(x) + d;
          return std::complex<double>{std::cos(ang), std::sin(ang)};
        };
        ArchimedeanSnap snap = snap_to_archimedean(alpha, str_xmax, 100.0);
        json j{{"t0", t0},
               {"noise", noise},
               {"seed", str_seed},
               {"t_recovered", snap.t},
               {"t_error", std::abs(snap.t - t0)},
               {"sup_error", snap.sup_error}};
        std::cout << j.dump(2) << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
