#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chowla/dirichlet.hpp"

namespace chowla {

struct StraighteningError : std::runtime_error {
  explicit StraighteningError(const std::string& m) : std::runtime_error(m) {}
};
// cocycle logarithm left the principal-branch safe zone
struct EpsTooLargeError : StraighteningError {
  explicit EpsTooLargeError(const std::string& m) : StraighteningError(m) {}
};

// eps-quasimorphism on the units mod q: psi(1) = 1, |psi| bounded,
// psi(b1 b2) = psi(b1) psi(b2) exp(O(eps)).
struct UnitGroupQuasimorphism {
  uint32_t q = 1;
  std::vector<std::complex<double>> values;  // indexed by residue; only units read
  double bound_C = 2.0;
};

struct DirichletSnap {
  DirichletCharacter chi;
  double sup_error = 0;  // sup_b |psi(b) - chi(b)|
};

// Snap psi to an exact Dirichlet character: cocycle rho from the principal
// log of psi(b1 b2)/(psi(b1) psi(b2)), coboundary phi(b) = mean_b3 rho(b,b3),
// candidate psi(b) exp(phi(b)) rounded to the nearest phi(q)-th root of
// unity, then verified to be exactly multiplicative.
DirichletSnap snap_to_dirichlet(const UnitGroupQuasimorphism& psi, double eps);

// eps-quasimorphism on (0, infinity): alpha(x) = 1 + O(eps) near 1,
// alpha(xy) = alpha(x) alpha(y) exp(O(eps)).
struct PositiveRealQuasimorphism {
  std::function<std::complex<double>(double)> sampler;
  double bound_C = 2.0;
  double eps = 0.01;
  double granule = 0;  // measurability discretisation step; 0 = eps^2
};

struct ArchimedeanSnap {
  double t = 0;          // alpha(x) ~ x^{-it}
  double sup_error = 0;  // sup over the audit grid of |alpha(x) - x^{-it}|
};

// Snap alpha to an Archimedean character x^{-it}: finite-average coboundary
// phi(x) = (1/log M) int_1^M rho(x,x3) dx3/x3, alpha~ = alpha exp(phi), t
// extracted at x0 = 1 + eps and refined up a dyadic ladder of powers of x0.
ArchimedeanSnap snap_to_archimedean(const PositiveRealQuasimorphism& alpha, double x_max,
                                    double M);

}  // namespace chowla
