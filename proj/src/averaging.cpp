#include "chowla/averaging.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace chowla {

const char* scheme_name(WeightScheme s) {
  switch (s) {
    case WeightScheme::Unweighted:
      return "unweighted";
    case WeightScheme::Log:
      return "log";
    case WeightScheme::LogLog:
      return "loglog";
    case WeightScheme::PrimeUnweighted:
      return "prime";
    case WeightScheme::PrimeLog:
      return "prime_log";
  }
  return "?";
}

WeightScheme scheme_from_name(const std::string& name) {
  if (name == "unweighted") return WeightScheme::Unweighted;
  if (name == "log") return WeightScheme::Log;
  if (name == "loglog") return WeightScheme::LogLog;
  if (name == "prime") return WeightScheme::PrimeUnweighted;
  if (name == "prime_log") return WeightScheme::PrimeLog;
  throw std::invalid_argument("unknown weight scheme: " + name);
}

ScaleGrid ScaleGrid::geometric(double x0, double ratio, int count) {
  ScaleGrid g{x0, ratio, count};
  g.validate();
  return g;
}

ScaleGrid ScaleGrid::up_to(double x0, double x_max, double ratio) {
  if (x_max < x0) throw std::invalid_argument("scale grid: x_max < x0");
  int count = 1;
  double x = x0;
  while (x * ratio <= x_max * (1 + 1e-12)) {
    x *= ratio;
    ++count;
  }
  return geometric(x0, ratio, count);
}

void ScaleGrid::validate() const {
  if (!(x0 > 1.0)) throw std::invalid_argument("scale grid: x0 > 1 required");
  if (!(ratio > 1.0)) throw std::invalid_argument("scale grid: ratio > 1 required");
  if (count < 1) throw std::invalid_argument("scale grid: count >= 1 required");
  if (!std::isfinite(scale(count - 1))) throw std::invalid_argument("scale grid: overflow");
}

std::vector<double> ScaleGrid::scales() const {
  std::vector<double> v(count);
  for (int j = 0; j < count; ++j) v[j] = scale(j);
  return v;
}

}  // namespace chowla
