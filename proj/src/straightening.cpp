#include "chowla/straightening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace chowla {

namespace {

constexpr double kLogSafeRadius = 0.5;  // |log ratio| cap keeping the principal branch safe
constexpr double kEpsCap = 0.1;

// principal log of a ratio expected to be exp(O(eps)); throws when outside
// the safe zone
std::complex<double> cocycle_log(std::complex<double> num, std::complex<double> den,
                                 const char* who) {
  std::complex<double> ratio = num / den;
  double r = std::abs(ratio);
  if (!(r > 0) || !std::isfinite(r))
    throw EpsTooLargeError(std::string(who) + ": degenerate cocycle ratio");
  std::complex<double> lg{std::log(r), std::arg(ratio)};
  if (std::abs(lg) > kLogSafeRadius)
    throw EpsTooLargeError(std::string(who) + ": cocycle log outside the safe zone (|log|=" +
                           std::to_string(std::abs(lg)) + ")");
  return lg;
}

}  // namespace

DirichletSnap snap_to_dirichlet(const UnitGroupQuasimorphism& psi, double eps) {
  if (!(eps >= 0) || eps > kEpsCap)
    throw std::invalid_argument("snap_to_dirichlet: eps must be in [0, 0.1]");
  uint32_t q = psi.q;
  if (q == 0) throw std::invalid_argument("snap_to_dirichlet: q >= 1 required");
  if (psi.values.size() != q) throw std::invalid_argument("snap_to_dirichlet: table size != q");

  UnitGroup G = UnitGroup::of(q);
  const auto& units = G.units;
  size_t nu = units.size();
  uint32_t phi_q = static_cast<uint32_t>(nu);

  auto val = [&](uint32_t r) { return psi.values[r]; };
  auto mul = [&](uint32_t a, uint32_t b) -> uint32_t {
    return static_cast<uint32_t>(static_cast<uint64_t>(a) * b % q);
  };
  // q = 1: the unit "residue" is 0 and psi(0*0)=psi(0)
  auto mulq = [&](uint32_t a, uint32_t b) -> uint32_t { return q == 1 ? 0 : mul(a, b); };

  // rho(b1,b2): principal log of psi(b1 b2) / (psi(b1) psi(b2))
  std::vector<std::vector<std::complex<double>>> rho(nu,
                                                     std::vector<std::complex<double>>(nu));
  for (size_t i = 0; i < nu; ++i)
    for (size_t j = 0; j < nu; ++j)
      rho[i][j] =
          cocycle_log(val(mulq(units[i], units[j])), val(units[i]) * val(units[j]),
                      "snap_to_dirichlet");

  // coboundary phi(b) = mean over b3 of rho(b, b3)
  std::vector<std::complex<double>> phi(nu, 0.0);
  for (size_t i = 0; i < nu; ++i) {
    std::complex<double> s = 0;
    for (size_t j = 0; j < nu; ++j) s += rho[i][j];
    phi[i] = s / static_cast<double>(nu);
  }

  // candidate chi(b) = psi(b) exp(phi(b)), then snap each value to the
  // nearest phi(q)-th root of unity (character values lie in mu_phi(q))
  std::vector<int32_t> expo(q, -1);
  double snap_dist = 0;
  for (size_t i = 0; i < nu; ++i) {
    std::complex<double> cand = val(units[i]) * std::exp(phi[i]);
    double ang = std::arg(cand);
    double k_real = ang * phi_q / (2.0 * M_PI);
    int32_t k = static_cast<int32_t>(std::llround(k_real));
    k %= static_cast<int32_t>(phi_q);
    if (k < 0) k += phi_q;
    double root_ang = 2.0 * M_PI * k / phi_q;
    snap_dist = std::max(snap_dist,
                         std::abs(cand - std::complex<double>{std::cos(root_ang),
                                                              std::sin(root_ang)}));
    expo[units[i]] = k;
  }

  // exact multiplicativity of the rounded table
  double worst = 0;
  uint32_t worst_a = 0, worst_b = 0;
  for (size_t i = 0; i < nu; ++i) {
    for (size_t j = 0; j < nu; ++j) {
      int32_t lhs = expo[mulq(units[i], units[j])];
      int32_t rhs = (expo[units[i]] + expo[units[j]]) % static_cast<int32_t>(phi_q);
      if (lhs != rhs) {
        int32_t diff = std::abs(lhs - rhs) % static_cast<int32_t>(phi_q);
        double ang = 2.0 * M_PI * diff / phi_q;
        double viol = std::abs(1.0 - std::complex<double>{std::cos(ang), std::sin(ang)});
        if (viol > worst) {
          worst = viol;
          worst_a = units[i];
          worst_b = units[j];
        }
      }
    }
  }
  if (worst > 0) {
    std::ostringstream ss;
    ss << "snap_to_dirichlet: rounded table is not multiplicative; worst relation at (b1,b2)=("
       << worst_a << "," << worst_b << ") with |chi(b1 b2) - chi(b1)chi(b2)| = " << worst;
    throw StraighteningError(ss.str());
  }
  if (expo[q == 1 ? 0 : 1] != 0)
    throw StraighteningError("snap_to_dirichlet: chi(1) != 1 after rounding");

  DirichletSnap out{DirichletCharacter::from_exponents(q, phi_q, std::move(expo)), 0.0};
  for (size_t i = 0; i < nu; ++i) {
    uint32_t r = units[i];
    out.sup_error = std::max(out.sup_error,
                             std::abs(val(r) - out.chi.value_at_residue(q == 1 ? 0 : r)));
  }
  return out;
}

// ---------------------------------------------------------------------------

ArchimedeanSnap snap_to_archimedean(const PositiveRealQuasimorphism& alpha, double x_max,
                                    double M) {
  if (!alpha.sampler) throw std::invalid_argument("snap_to_archimedean: sampler required");
  if (!(alpha.eps >= 0) || alpha.eps > kEpsCap)
    throw std::invalid_argument("snap_to_archimedean: eps must be in [0, 0.1]");
  if (M < 100) throw std::invalid_argument("snap_to_archimedean: M >= 100 required");
  if (!(x_max > 4)) throw std::invalid_argument("snap_to_archimedean: x_max > 4 required");

  double eps = alpha.eps;
  double granule = alpha.granule > 0 ? alpha.granule : std::max(eps * eps, 1e-9);

  // discretised alpha_1, mirroring the proof's measurable version
  auto a = [&](double x) -> std::complex<double> {
    double xq;
    if (x >= eps && eps > 0) {
      xq = granule * std::floor(x / granule);
      if (xq <= 0) xq = granule;
    } else if (eps > 0 && x < eps) {
      double n = std::floor(1.0 / x);
      xq = 1.0 / n;
    } else {
      xq = x;
    }
    return alpha.sampler(xq);
  };

  // phi(x) = (1/log M) int_1^M rho(x, x3) dx3/x3, composite Simpson in log x3
  const int kQuadIntervals = 512;  // even
  double logM = std::log(M);
  auto phi = [&](double x) -> std::complex<double> {
    std::complex<double> ax = a(x);
    std::complex<double> acc = 0;
    double h = logM / kQuadIntervals;
    for (int i = 0; i <= kQuadIntervals; ++i) {
      double u = i * h;
      double x3 = std::exp(u);
      std::complex<double> r = cocycle_log(a(x * x3), ax * a(x3), "snap_to_archimedean");
      double w = (i == 0 || i == kQuadIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * r;
    }
    return acc * (h / 3.0) / logM;
  };

  auto alpha_tilde_arg = [&](double x) -> double {
    std::complex<double> v = a(x) * std::exp(phi(x));
    return std::arg(v);
  };

  // t extraction at x0 = 1 + eps, then refinement up the dyadic ladder
  // x0^(2^j): each level doubles log x and roughly halves the t uncertainty
  // relative to the phase noise
  double x0 = 1.0 + std::max(eps, 1e-3);
  double L0 = std::log(x0);
  double theta0 = alpha_tilde_arg(x0);
  // alpha~ = x^{+is} with s measured; the lemma's convention is alpha ~ x^{-it}
  double t_hat = -theta0 / L0;

  double L = L0;
  double x = x0;
  while (x * x <= x_max) {
    x *= x;
    L *= 2.0;
    double theta = alpha_tilde_arg(x);  // = -t L (mod 2pi) up to O(eps)
    double predicted = -t_hat * L;
    double wraps = std::round((predicted - theta) / (2.0 * M_PI));
    double full = theta + 2.0 * M_PI * wraps;
    if (std::abs(full - predicted) > M_PI / 2)
      throw StraighteningError("snap_to_archimedean: inconsistent ladder, no single t fits");
    t_hat = -full / L;
  }

  // audit grid for the reported sup error: geometric over [1/x_max, x_max]
  ArchimedeanSnap out;
  out.t = t_hat;
  const int kAudit = 2048;
  double lo = 1.0 / x_max;
  double step = std::pow(x_max / lo, 1.0 / (kAudit - 1));
  double xx = lo;
  for (int i = 0; i < kAudit; ++i, xx *= step) {
    std::complex<double> model{std::cos(-t_hat * std::log(xx)), std::sin(-t_hat * std::log(xx))};
    out.sup_error = std::max(out.sup_error, std::abs(alpha.sampler(xx) - model));
  }
  return out;
}

}  // namespace chowla
