#include "chowla/pretense.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "chowla/factor_sieve.hpp"
#include "chowla/sweep.hpp"

namespace chowla {

double pretentious_distance_sq(const FunctionSpec& f, const FunctionSpec& g, double X) {
  if (X < 2) throw std::invalid_argument("pretentious distance: X >= 2 required");
  CompensatedSum acc;
  for_primes(2, static_cast<uint64_t>(X) + 1, [&](uint64_t p) {
    std::complex<double> fp = f.value_at_prime(p);
    std::complex<double> gp = g.value_at_prime(p);
    double term = (1.0 - (fp * std::conj(gp)).real()) / static_cast<double>(p);
    acc.add(term);
  });
  return std::max(0.0, acc.value());
}

PretenseProfile weak_pretension_profile(const FunctionSpec& f, const FunctionSpec& g,
                                        const ScaleGrid& grid) {
  grid.validate();
  if (grid.x0 < 3) throw std::invalid_argument("weak pretension: scales >= 3 required");
  PretenseProfile prof;
  prof.scales = grid.scales();
  prof.dist_sq.reserve(grid.count);
  prof.normalized.reserve(grid.count);

  CompensatedSum acc;
  uint64_t max_p = static_cast<uint64_t>(grid.max());
  size_t j = 0;
  std::vector<double> d2(grid.count, 0.0);
  for_primes(2, max_p + 1, [&](uint64_t p) {
    while (j < prof.scales.size() && static_cast<double>(p) > prof.scales[j]) {
      d2[j] = std::max(0.0, acc.value());
      ++j;
    }
    std::complex<double> fp = f.value_at_prime(p);
    std::complex<double> gp = g.value_at_prime(p);
    acc.add((1.0 - (fp * std::conj(gp)).real()) / static_cast<double>(p));
  });
  while (j < prof.scales.size()) {
    d2[j] = std::max(0.0, acc.value());
    ++j;
  }
  for (int i = 0; i < grid.count; ++i) {
    prof.dist_sq.push_back(d2[i]);
    prof.normalized.push_back(d2[i] / std::log(std::log(prof.scales[i])));
  }

  // Heuristic label from the last three normalized values (non-binding: the
  // paper's o(log log X) statement has no finite-scale test).  A bounded
  // D^2 makes the normalized column decay like 1/loglog X, so the observed
  // ratio v3/v1 sits near loglog(X1)/loglog(X3); a D^2 growing at the
  // loglog rate or faster keeps the ratio near or above 1.
  prof.verdict = "inconclusive";
  int c = grid.count;
  if (c >= 3) {
    double v1 = prof.normalized[c - 3], v3 = prof.normalized[c - 1];
    double l1 = std::log(std::log(prof.scales[c - 3]));
    double l3 = std::log(std::log(prof.scales[c - 1]));
    double pred = l1 / l3;  // ratio if D^2 stayed bounded
    if (v3 < 1e-9) {
      prof.verdict = "trending-0";
    } else if (v1 > 0) {
      double obs = v3 / v1;
      if (obs <= pred + 0.25 * (1.0 - pred))
        prof.verdict = "trending-0";
      else if (obs >= pred + 0.6 * (1.0 - pred))
        prof.verdict = "trending-inf";
    }
  } else if (c >= 1 && prof.normalized[c - 1] < 1e-9) {
    prof.verdict = "trending-0";
  }
  return prof;
}

TwistFit fit_twisted_character(const FunctionSpec& g, uint32_t q_max, double t_max, double X,
                               uint64_t budget, int threads) {
  if (q_max < 1) throw std::invalid_argument("fit: q_max >= 1 required");
  if (!(t_max > 0)) throw std::invalid_argument("fit: t_max > 0 required");
  if (X < 100) throw std::invalid_argument("fit: X >= 100 required");

  std::vector<uint64_t> primes = primes_in(2, static_cast<uint64_t>(X) + 1);
  size_t np = primes.size();

  double delta = 1.0 / std::log(X);
  int t_steps = static_cast<int>(std::floor(t_max / delta));
  size_t n_t = 2 * static_cast<size_t>(t_steps) + 1;

  uint64_t n_chars = 0;
  for (uint32_t q = 1; q <= q_max; ++q) n_chars += euler_phi(q);
  if (n_chars * n_t * np > budget)
    throw SearchBudgetError("fit: search budget exceeded (" + std::to_string(n_chars * n_t * np) +
                            " prime terms > " + std::to_string(budget) + ")");

  // base = sum 1/p; per (chi, t): D^2 = base - Re sum_p g(p) conj(chi(p)) p^{-it} / p
  std::vector<double> lnp(np), invp(np);
  std::vector<std::complex<double>> gp(np);
  double base = 0;
  for (size_t i = 0; i < np; ++i) {
    lnp[i] = std::log(static_cast<double>(primes[i]));
    invp[i] = 1.0 / static_cast<double>(primes[i]);
    gp[i] = g.value_at_prime(primes[i]);
    base += invp[i];
  }

  struct Cand {
    double d2 = std::numeric_limits<double>::infinity();
    uint32_t q = 1;
    uint32_t index = 0;
    double t = 0;
  };

  auto scan_character = [&](uint32_t q, uint32_t index, const DirichletCharacter& chi,
                            double t_lo, double t_hi, double dt) {
    std::vector<std::complex<double>> c(np);
    for (size_t i = 0; i < np; ++i)
      c[i] = gp[i] * std::conj(chi.value(primes[i])) * invp[i];
    Cand best;
    for (double t = t_lo; t <= t_hi + dt * 1e-9; t += dt) {
      double re = 0;
      for (size_t i = 0; i < np; ++i) {
        // Re c_i * e^{-i t ln p_i}
        double ang = t * lnp[i];
        re += c[i].real() * std::cos(ang) + c[i].imag() * std::sin(ang);
      }
      double d2 = base - re;
      if (d2 < best.d2) best = {d2, q, index, t};
    }
    return best;
  };

  // coarse scan, parallel over characters
  std::vector<std::pair<uint32_t, uint32_t>> jobs;
  std::vector<DirichletCharacter> chars;
  for (uint32_t q = 1; q <= q_max; ++q) {
    auto cq = DirichletCharacter::enumerate(q);
    for (uint32_t i = 0; i < cq.size(); ++i) {
      jobs.emplace_back(q, i);
      chars.push_back(std::move(cq[i]));
    }
  }
  int nthreads = resolve_threads(threads);
  std::vector<Cand> results(jobs.size());
  std::atomic<size_t> next{0};
  auto work = [&]() {
    while (true) {
      size_t j = next.fetch_add(1);
      if (j >= jobs.size()) break;
      results[j] = scan_character(jobs[j].first, jobs[j].second, chars[j], -t_steps * delta,
                                  t_steps * delta, delta);
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < nthreads; ++i) pool.emplace_back(work);
  for (auto& th : pool) th.join();

  // canonical argmin: ties broken by (q, index, t)
  Cand best;
  size_t best_j = 0;
  for (size_t j = 0; j < results.size(); ++j) {
    if (results[j].d2 < best.d2) {
      best = results[j];
      best_j = j;
    }
  }

  // refinement pass around the best cell
  Cand refined = scan_character(best.q, best.index, chars[best_j],
                                std::max(-t_max, best.t - delta),
                                std::min(t_max, best.t + delta), delta / 16.0);
  if (refined.d2 < best.d2) best = refined;

  TwistFit fit;
  fit.q = best.q;
  fit.index = best.index;
  fit.chi = chars[best_j];
  fit.t = best.t;
  fit.dist_sq = best.d2;
  fit.grid_delta = delta;
  return fit;
}

}  // namespace chowla
