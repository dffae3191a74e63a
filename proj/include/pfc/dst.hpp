#pragma once

#include <vector>

#include "pfc/types.hpp"

namespace pfc {

/// Sine transform on the interior nodes x_i = i*pi/G, i = 1..G-1, against the
/// normalized basis eta_k = sqrt(2/pi) sin(kx). Exact for functions whose
/// sine band is below G, which is how the pseudo-spectral products avoid
/// aliasing (the grid is chosen with G > 3N for a cubic nonlinearity).
class SineGrid {
 public:
  explicit SineGrid(int points);

  int points() const { return g_; }
  double node(int i) const;  // i = 1..G-1

  /// coeff (length n) -> values at the G-1 interior nodes.
  void synthesize(const std::vector<double>& coeff, std::vector<double>& values) const;
  /// values at interior nodes -> first n sine coefficients.
  void analyze(const std::vector<double>& values, int n, std::vector<double>& coeff) const;

 private:
  int g_;
  std::vector<double> sintab_;  // sin(k*i*pi/G), k major
  const double* row(int k) const { return sintab_.data() + static_cast<std::size_t>(k - 1) * (g_ - 1); }
};

/// Smallest power-of-two grid with G > 3*modes (cubic products alias-free).
int dealiased_grid(int modes, int minimum = 64);

}  // namespace pfc
