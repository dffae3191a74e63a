#include "pfc/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pfc {

namespace {
double log_weight(double coeff, double T, double t, double plateau_end) {
  const double tt = std::max(t, plateau_end);  // constant extension on the left
  if (tt >= T) return -std::numeric_limits<double>::infinity();
  return -coeff / (T - tt);
}
}  // namespace

double WeightSchedule::log_rho_source(double t) const {
  return log_weight(b * b * (a + 1.0) * M / (b - 1.0), T, t, plateau_end());
}

double WeightSchedule::log_rho_state(double t) const {
  return log_weight(a * M / (b - 1.0), T, t, plateau_end());
}

double WeightSchedule::chain_identity_residual(int k) const {
  const double tk = knot(k), tk1 = knot(k + 1), tk2 = knot(k + 2);
  const double lhs = -a * M / ((b - 1.0) * (T - tk2));
  const double rhs = -b * b * (a + 1.0) * M / ((b - 1.0) * (T - tk)) + M / (tk2 - tk1);
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

double WeightSchedule::weight_ratio_sup(int p, int samples) const {
  double sup = 0.0;
  for (int i = 0; i < samples; ++i) {
    // leave the final node out: both weights vanish at T and the ratio's
    // limit is 0 (bounded) or +inf (unbounded) depending on the exponents
    const double t = T * double(i) / double(samples);
    const double lg = double(p) * log_rho_state(t) - log_rho_source(t);
    sup = std::max(sup, std::exp(lg));
  }
  // limit behaviour at T decides unboundedness regardless of sampling
  if (!ratio_bounded(p)) sup = std::numeric_limits<double>::infinity();
  return sup;
}

WeightSchedule make_weights(double T, double a, double b, double M, const WeightOptions& opt) {
  if (!(T > 0.0)) throw std::invalid_argument("make_weights: T must be positive");
  if (!(a > 1.0)) throw std::invalid_argument("make_weights: need a > 1");
  const double b2_max = 2.0 * a / (a + 1.0);
  if (!(b > 1.0) || !(b * b < b2_max))
    throw std::invalid_argument("make_weights: need 1 < b^2 < 2a/(a+1)");
  if (!(M > 0.0)) throw std::invalid_argument("make_weights: M must be positive");

  WeightSchedule w;
  w.T = T;
  w.a = a;
  w.b = b;
  w.M = M;
  w.grid.push_back(0.0);
  for (int k = 1; k <= opt.max_knots; ++k) {
    const double tk = w.knot(k);
    if (tk - w.grid.back() < opt.dt_min_frac * T) break;
    w.grid.push_back(tk);
  }
  return w;
}

}  // namespace pfc
