#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pfc/precise.hpp"
#include "pfc/types.hpp"

namespace pfc {

/// Control represented as a combination of dictionary exponentials,
/// u(t) = sum_j w_j e^{-L_j t} on (0, T), applied reversed in time:
/// v(t) = u(T - t). The weights come from an ill-conditioned solve and can be
/// individually huge while the signal itself is moderate, so pointwise
/// evaluation runs in extended precision.
struct ExpAtomSet {
  double horizon = 0.0;
  std::vector<double> decay;
  std::shared_ptr<mp::Vec> weights;  // shared: signals are value types

  bool empty() const { return !weights || decay.empty(); }
  /// v at a single time (extended-precision sum, rounded once).
  double eval_v(double t) const;
  /// v at the nodes t_i = t0 + i*(t1-t0)/n, i = 0..n, by per-atom geometric
  /// recurrences (one exp per atom).
  std::vector<double> sample_v(double t0, double t1, int n) const;
  /// weights as decimal strings round-tripping the full precision
  std::vector<std::string> weight_strings(int digits = 0) const;
};

/// Scalar boundary control on [0, T]. The active atoms may stop before the
/// horizon (support < T, extension by zero), which is how a short-horizon
/// control is reused on a longer window.
class ControlSignal {
 public:
  ControlSignal() = default;
  static ControlSignal zero(double T) {
    ControlSignal s;
    s.horizon_ = s.support_ = T;
    return s;
  }
  static ControlSignal from_atoms(ExpAtomSet atoms, double l2_norm, double horizon = -1.0);

  double horizon() const { return horizon_; }
  double support() const { return support_; }
  bool is_zero() const { return atoms_.empty(); }
  double l2_norm() const { return l2_norm_; }
  const ExpAtomSet& atoms() const { return atoms_; }

  double operator()(double t) const {
    return (atoms_.empty() || t > support_) ? 0.0 : atoms_.eval_v(t);
  }
  std::vector<double> sample(double t0, double t1, int n) const;

  /// Uniform trace over [0, T] (default 2048 intervals), cached.
  const std::vector<double>& trace(int points = 2048) const;

 private:
  double horizon_ = 0.0;
  double support_ = 0.0;
  ExpAtomSet atoms_;
  double l2_norm_ = 0.0;
  mutable std::vector<double> trace_;
};

/// Controls concatenated over consecutive subintervals of [0, T].
struct PiecewiseControl {
  struct Piece {
    double t0 = 0.0, t1 = 0.0;
    ControlSignal local;  // defined on [0, t1-t0]
  };
  double horizon = 0.0;
  std::vector<Piece> pieces;

  double operator()(double t) const;
  std::vector<double> sample(double t0, double t1, int n) const;
  double l2_norm() const;
};

/// Node-exact scalar signal source for the integrator: values at the 2n+1
/// Simpson nodes of [t0, t1].
using SignalSampler = std::function<std::vector<double>(double t0, double t1, int steps)>;

SignalSampler zero_signal();
SignalSampler sampler_of(const ControlSignal& s, double offset = 0.0);
SignalSampler sampler_of(const PiecewiseControl& s);
SignalSampler sampler_of_function(std::function<double(double)> f);

}  // namespace pfc
