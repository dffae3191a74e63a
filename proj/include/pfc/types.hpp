#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfc {

inline constexpr const char* kVersion = "1.0.0";

/// Model coefficients of the coupled temperature/phase system on (0, pi).
/// c selects the constant target phase: +1 (solid), -1 (liquid) share one
/// linearization; c = 0 (mushy) uses its own coupling matrix whose spectrum
/// equals the c = +-1 formulas evaluated at (2*rho, 2*tau).
struct Parameters {
  double xi = 1.0;   // thermal diffusivity
  double rho = 1.0;  // latent heat
  double tau = 1.0;  // relaxation time
  int c = 1;         // target phase constant, in {-1, 0, +1}

  void validate() const {
    if (!(xi > 0.0) || !(rho > 0.0) || !(tau > 0.0))
      throw std::invalid_argument("Parameters: xi, rho, tau must be positive");
    if (c != -1 && c != 0 && c != 1)
      throw std::invalid_argument("Parameters: c must be -1, 0 or +1");
  }
  bool mushy() const { return c == 0; }
  double rho_eff() const { return mushy() ? 2.0 * rho : rho; }
  double tau_eff() const { return mushy() ? 2.0 * tau : tau; }
};

struct Vec2 {
  double t = 0.0;  // temperature component
  double p = 0.0;  // phase component

  Vec2() = default;
  Vec2(double a, double b) : t(a), p(b) {}
  Vec2 operator+(const Vec2& o) const { return {t + o.t, p + o.p}; }
  Vec2 operator-(const Vec2& o) const { return {t - o.t, p - o.p}; }
  Vec2 operator*(double s) const { return {t * s, p * s}; }
  Vec2& operator+=(const Vec2& o) {
    t += o.t;
    p += o.p;
    return *this;
  }
  double dot(const Vec2& o) const { return t * o.t + p * o.p; }
  double norm() const { return std::sqrt(t * t + p * p); }
};
inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Mat2 {
  double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

  Vec2 apply(const Vec2& v) const {
    return {a11 * v.t + a12 * v.p, a21 * v.t + a22 * v.p};
  }
  Mat2 transpose() const { return {a11, a21, a12, a22}; }
  Mat2 operator+(const Mat2& o) const {
    return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
  }
  Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
};

/// Diffusion matrix D (shared by all c).
inline Mat2 diffusion_matrix(const Parameters& prm) {
  return {prm.xi, -0.5 * prm.rho * prm.xi, 0.0, prm.xi};
}

/// Zero-order coupling matrix of the linearized system.
inline Mat2 coupling_matrix(const Parameters& prm) {
  if (prm.mushy())
    return {prm.rho / prm.tau, -prm.rho / (4.0 * prm.tau),
            -2.0 / prm.tau, 1.0 / (2.0 * prm.tau)};
  return {prm.rho / prm.tau, -prm.rho / (2.0 * prm.tau),
          -2.0 / prm.tau, 1.0 / prm.tau};
}

/// Per-mode 2x2 generator k^2 D + A of the sine-Galerkin reduction.
inline Mat2 mode_matrix(const Parameters& prm, int k) {
  const double k2 = static_cast<double>(k) * k;
  return diffusion_matrix(prm) * k2 + coupling_matrix(prm);
}

enum class Space { HMinus1, L2, H01 };

inline const char* space_name(Space s) {
  switch (s) {
    case Space::HMinus1: return "H^-1";
    case Space::L2: return "L^2";
    default: return "H^1_0";
  }
}

/// Two-component state in sine coefficients: coeff[k-1] holds the mode-k
/// coefficients of (theta, phi) against the normalized basis
/// eta_k(x) = sqrt(2/pi) sin(k x).
struct FourierState {
  std::vector<Vec2> coeff;
  Space space = Space::HMinus1;

  FourierState() = default;
  FourierState(int modes, Space sp) : coeff(static_cast<std::size_t>(modes)), space(sp) {}

  int modes() const { return static_cast<int>(coeff.size()); }

  static double mode_weight(Space sp, int k) {
    const double k2 = static_cast<double>(k) * k;
    switch (sp) {
      case Space::HMinus1: return 1.0 / k2;
      case Space::L2: return 1.0;
      default: return k2;
    }
  }

  double norm_sq_component(Space sp, bool phase) const {
    double s = 0.0;
    for (int k = 1; k <= modes(); ++k) {
      const double a = phase ? coeff[k - 1].p : coeff[k - 1].t;
      s += mode_weight(sp, k) * a * a;
    }
    return s;
  }
  double norm_component(Space sp, bool phase) const {
    return std::sqrt(norm_sq_component(sp, phase));
  }
  /// Norm of the full vector state in X(0,pi;R^2).
  double norm(Space sp) const {
    return std::sqrt(norm_sq_component(sp, false) + norm_sq_component(sp, true));
  }
  /// Product norm with theta measured in H^-1 and phi in H^1_0.
  double norm_mixed() const {
    return std::sqrt(norm_sq_component(Space::HMinus1, false) +
                     norm_sq_component(Space::H01, true));
  }

  FourierState& operator+=(const FourierState& o) {
    if (o.modes() != modes()) throw std::invalid_argument("FourierState: mode count mismatch");
    for (std::size_t i = 0; i < coeff.size(); ++i) coeff[i] += o.coeff[i];
    return *this;
  }
  FourierState scaled(double s) const {
    FourierState r = *this;
    for (auto& c : r.coeff) c = c * s;
    return r;
  }
};

/// Duality pairing <y, w> = sum_k y_k . w_k (coefficient form of the
/// H^-1 x H^1_0 pairing extending the L^2 inner product).
inline double pairing(const FourierState& y, const FourierState& w) {
  const int n = std::min(y.modes(), w.modes());
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += y.coeff[i].dot(w.coeff[i]);
  return s;
}

struct PrecisionExhausted : std::runtime_error {
  double achieved_residual;
  long bits_tried;
  PrecisionExhausted(double res, long bits)
      : std::runtime_error("biorthogonal solve: residual target unreachable at precision cap (achieved " +
                           std::to_string(res) + " at " + std::to_string(bits) + " bits)"),
        achieved_residual(res), bits_tried(bits) {}
};

struct IndexMapMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoContraction : std::runtime_error {
  double last_ratio;
  explicit NoContraction(double r)
      : std::runtime_error("fixed-point iteration is not contracting (ratio " +
                           std::to_string(r) + "); initial data too large"),
        last_ratio(r) {}
};

}  // namespace pfc
