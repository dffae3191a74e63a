#include "pfc/dst.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pfc {

SineGrid::SineGrid(int points) : g_(points) {
  if (points < 4) throw std::invalid_argument("SineGrid: need at least 4 points");
  sintab_.resize(static_cast<std::size_t>(g_ - 1) * (g_ - 1));
  for (int k = 1; k < g_; ++k)
    for (int i = 1; i < g_; ++i)
      sintab_[static_cast<std::size_t>(k - 1) * (g_ - 1) + (i - 1)] =
          std::sin(std::numbers::pi * k * i / g_);
}

double SineGrid::node(int i) const { return std::numbers::pi * i / g_; }

void SineGrid::synthesize(const std::vector<double>& coeff, std::vector<double>& values) const {
  const int n = static_cast<int>(coeff.size());
  if (n >= g_) throw std::invalid_argument("SineGrid: band exceeds grid");
  values.assign(static_cast<std::size_t>(g_ - 1), 0.0);
  const double scale = std::sqrt(2.0 / std::numbers::pi);
  for (int k = 1; k <= n; ++k) {
    const double a = coeff[k - 1] * scale;
    if (a == 0.0) continue;
    const double* s = row(k);
    for (int i = 0; i < g_ - 1; ++i) values[i] += a * s[i];
  }
}

void SineGrid::analyze(const std::vector<double>& values, int n, std::vector<double>& coeff) const {
  if (static_cast<int>(values.size()) != g_ - 1)
    throw std::invalid_argument("SineGrid: value vector does not match the grid");
  if (n >= g_) throw std::invalid_argument("SineGrid: band exceeds grid");
  coeff.assign(static_cast<std::size_t>(n), 0.0);
  const double scale = std::sqrt(std::numbers::pi / 2.0) * 2.0 / g_;
  for (int k = 1; k <= n; ++k) {
    const double* s = row(k);
    double acc = 0.0;
    for (int i = 0; i < g_ - 1; ++i) acc += values[i] * s[i];
    coeff[k - 1] = acc * scale;
  }
}

int dealiased_grid(int modes, int minimum) {
  int g = minimum;
  while (g <= 3 * modes) g *= 2;
  return g;
}

}  // namespace pfc
