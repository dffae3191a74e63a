#include "pfc/signal.hpp"

#include <cmath>
#include <stdexcept>

namespace pfc {

double ExpAtomSet::eval_v(double t) const {
  if (empty()) return 0.0;
  const long bits = (*weights)[0].bits();
  mp::Real acc(bits), term(bits);
  const double back = horizon - t;  // u evaluated at T - t
  for (std::size_t j = 0; j < decay.size(); ++j) {
    term.set(-decay[j] * back);
    mpfr_exp(term.raw(), term.raw(), MPFR_RNDN);
    acc.add_mul((*weights)[j], term);
  }
  return acc.to_double();
}

std::vector<double> ExpAtomSet::sample_v(double t0, double t1, int n) const {
  std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
  if (empty()) return out;
  const long bits = (*weights)[0].bits();
  const double h = (t1 - t0) / n;
  // v(t_i) = sum_j w_j e^{-L_j (T - t0)} (e^{L_j h})^i; the running products
  // stay accurate because relative error composes multiplicatively.
  const std::size_t m = decay.size();
  std::vector<mp::Real> cur(m, mp::Real(bits)), ratio(m, mp::Real(bits));
  for (std::size_t j = 0; j < m; ++j) {
    mp::Real e(-decay[j] * (horizon - t0), bits);
    mpfr_exp(e.raw(), e.raw(), MPFR_RNDN);
    cur[j] = (*weights)[j] * e;
    mp::Real q(decay[j] * h, bits);
    mpfr_exp(q.raw(), q.raw(), MPFR_RNDN);
    ratio[j] = q;
  }
  mp::Real acc(bits);
  for (int i = 0; i <= n; ++i) {
    acc.set_zero();
    for (std::size_t j = 0; j < m; ++j) acc += cur[j];
    out[static_cast<std::size_t>(i)] = acc.to_double();
    if (i < n)
      for (std::size_t j = 0; j < m; ++j) cur[j] *= ratio[j];
  }
  return out;
}

std::vector<std::string> ExpAtomSet::weight_strings(int digits) const {
  std::vector<std::string> out;
  if (empty()) return out;
  const int d = digits > 0 ? digits : static_cast<int>((*weights)[0].bits() * 0.3011) + 2;
  out.reserve(decay.size());
  for (const auto& w : *weights) out.push_back(w.str(d));
  return out;
}

ControlSignal ControlSignal::from_atoms(ExpAtomSet atoms, double l2_norm, double horizon) {
  ControlSignal s;
  s.support_ = atoms.horizon;
  s.horizon_ = horizon > 0.0 ? horizon : atoms.horizon;
  s.atoms_ = std::move(atoms);
  s.l2_norm_ = l2_norm;
  return s;
}

std::vector<double> ControlSignal::sample(double t0, double t1, int n) const {
  if (atoms_.empty()) return std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0);
  auto out = atoms_.sample_v(t0, t1, n);
  if (t1 > support_) {
    const double h = (t1 - t0) / n;
    for (int i = 0; i <= n; ++i)
      if (t0 + h * i > support_ * (1.0 + 1e-15)) out[static_cast<std::size_t>(i)] = 0.0;
  }
  return out;
}

const std::vector<double>& ControlSignal::trace(int points) const {
  if (trace_.size() != static_cast<std::size_t>(points) + 1)
    trace_ = sample(0.0, horizon_, points);
  return trace_;
}

double PiecewiseControl::operator()(double t) const {
  for (const auto& pc : pieces)
    if (t >= pc.t0 && (t < pc.t1 || &pc == &pieces.back())) return pc.local(t - pc.t0);
  return 0.0;
}

std::vector<double> PiecewiseControl::sample(double t0, double t1, int n) const {
  std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
  const double h = (t1 - t0) / n;
  // group consecutive nodes by piece so each group uses one recurrence pass
  std::size_t i = 0;
  while (i <= static_cast<std::size_t>(n)) {
    const double t = t0 + h * static_cast<double>(i);
    const Piece* owner = nullptr;
    for (const auto& pc : pieces)
      if (t >= pc.t0 - 1e-15 && (t < pc.t1 - 1e-15 || &pc == &pieces.back())) {
        owner = &pc;
        break;
      }
    if (!owner) {
      out[i] = 0.0;
      ++i;
      continue;
    }
    std::size_t iend = i;
    while (iend + 1 <= static_cast<std::size_t>(n) &&
           t0 + h * static_cast<double>(iend + 1) < owner->t1 - 1e-15)
      ++iend;
    const double a = t0 + h * static_cast<double>(i);
    const double b = t0 + h * static_cast<double>(iend);
    const auto seg = owner->local.sample(a - owner->t0, b - owner->t0,
                                         static_cast<int>(iend - i ? iend - i : 1));
    for (std::size_t s = i; s <= iend; ++s) out[s] = seg[s - i];
    i = iend + 1;
  }
  return out;
}

double PiecewiseControl::l2_norm() const {
  double s = 0.0;
  for (const auto& pc : pieces) s += pc.local.l2_norm() * pc.local.l2_norm();
  return std::sqrt(s);
}

SignalSampler zero_signal() {
  return [](double, double, int steps) {
    return std::vector<double>(static_cast<std::size_t>(2 * steps) + 1, 0.0);
  };
}

SignalSampler sampler_of(const ControlSignal& s, double offset) {
  ControlSignal copy = s;
  return [copy, offset](double t0, double t1, int steps) {
    return copy.sample(t0 - offset, t1 - offset, 2 * steps);
  };
}

SignalSampler sampler_of(const PiecewiseControl& s) {
  PiecewiseControl copy = s;
  return [copy](double t0, double t1, int steps) {
    return copy.sample(t0, t1, 2 * steps);
  };
}

SignalSampler sampler_of_function(std::function<double(double)> f) {
  return [f](double t0, double t1, int steps) {
    const int n = 2 * steps;
    std::vector<double> out(static_cast<std::size_t>(n) + 1);
    const double h = (t1 - t0) / n;
    for (int i = 0; i <= n; ++i) out[static_cast<std::size_t>(i)] = f(t0 + h * i);
    return out;
  };
}

}  // namespace pfc
