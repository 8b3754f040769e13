#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "chowla/averaging.hpp"
#include "chowla/mult_functions.hpp"

namespace chowla {

// D(f,g;X)^2 = sum_{p <= X} (1 - Re f(p) conj(g(p))) / p
double pretentious_distance_sq(const FunctionSpec& f, const FunctionSpec& g, double X);

struct PretenseProfile {
  std::vector<double> scales;
  std::vector<double> dist_sq;
  std::vector<double> normalized;  // dist_sq / loglog(X)
  std::string verdict;             // "trending-0" | "trending-inf" | "inconclusive"
};

PretenseProfile weak_pretension_profile(const FunctionSpec& f, const FunctionSpec& g,
                                        const ScaleGrid& grid);

struct TwistFit {
  uint32_t q = 1;
  uint32_t index = 0;
  DirichletCharacter chi;
  double t = 0;
  double dist_sq = 0;
  double grid_delta = 0;  // t-grid spacing used
};

struct SearchBudgetError : std::runtime_error {
  explicit SearchBudgetError(const std::string& m) : std::runtime_error(m) {}
};

// Exhaustive search over characters of modulus <= q_max and a t-grid of
// spacing 1/log X on [-t_max, t_max], with one refinement pass near the
// best cell.  A finite surrogate for the inf over |t| <= X in the
// non-pretentiousness condition.
TwistFit fit_twisted_character(const FunctionSpec& g, uint32_t q_max, double t_max, double X,
                               uint64_t budget = 4'000'000'000ull, int threads = 0);

}  // namespace chowla
