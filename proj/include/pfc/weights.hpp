#pragma once

#include <vector>

#include "pfc/types.hpp"

namespace pfc {

/// Geometric time grid T_k = T - T/b^k with the two decay weights that tie
/// the short-horizon control cost e^{M/len} to the source/state spaces:
///   rho_source(t) = exp(-b^2 (a+1) M / ((b-1)(T-t)))
///   rho_state(t)  = exp(-a M / ((b-1)(T-t)))
/// on [T(1-1/b^2), T], extended by their boundary values to the left.
struct WeightSchedule {
  double T = 0.0;
  double a = 0.0;
  double b = 0.0;
  double M = 0.0;
  std::vector<double> grid;  // T_0 = 0 .. T_K (strictly increasing, < T)

  double knot(int k) const { return T - T * std::pow(b, -double(k)); }
  double plateau_end() const { return T * (1.0 - 1.0 / (b * b)); }

  double log_rho_source(double t) const;  // extension-aware, safe near t = T
  double log_rho_state(double t) const;
  double rho_source(double t) const { return std::exp(log_rho_source(t)); }
  double rho_state(double t) const { return std::exp(log_rho_state(t)); }

  /// Relative residual of rho_state(T_{k+2}) = rho_source(T_k) e^{M/(T_{k+2}-T_{k+1})}
  /// with both sides in closed (un-extended) form, evaluated in log space.
  double chain_identity_residual(int k) const;

  /// Sampled sup of rho_state^p / rho_source over [0, T]; finite only when
  /// b^2 (a+1) < p a.
  double weight_ratio_sup(int p, int samples = 4096) const;
  bool ratio_bounded(int p) const { return b * b * (a + 1.0) < double(p) * a; }

  /// Weighted integrals are evaluated where the weight stays within floating
  /// point range; closer to T the quotient of machine noise by a vanishing
  /// weight is meaningless. log(DBL_MIN) ~ -708 with margin.
  static constexpr double kLogFloor = -600.0;
  bool source_resolvable(double t) const { return log_rho_source(t) > kLogFloor; }
  bool state_resolvable(double t) const { return log_rho_state(t) > kLogFloor; }
};

struct WeightOptions {
  double dt_min_frac = 1e-4;  // grid stops once T_{k+1}-T_k < dt_min_frac * T
  int max_knots = 512;
};

WeightSchedule make_weights(double T, double a, double b, double M,
                            const WeightOptions& opt = {});

}  // namespace pfc
