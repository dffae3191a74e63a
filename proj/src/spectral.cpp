#include "pfc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pfc/parallel.hpp"

namespace pfc {

namespace {

double branch_shift(const Parameters& prm) {
  return (prm.rho_eff() + 1.0) / (2.0 * prm.tau_eff());
}

/// Offset j with rho_e/((j+1)^2 tau_e) < xi <= rho_e/(j^2 tau_e); the right
/// boundary (the degenerate gap case) is assigned to j itself.
int branch_offset_closed(const Parameters& prm) {
  const double ratio = prm.rho_eff() / prm.tau_eff();
  int j = 0;
  while (prm.xi * double(j + 1) * double(j + 1) <= ratio) ++j;
  return j;
}

}  // namespace

EigenPair eigen_pair(const Parameters& prm, int k) {
  prm.validate();
  if (k < 1) throw std::invalid_argument("eigen_pair: mode index must be >= 1");

  const double re = prm.rho_eff();
  const double te = prm.tau_eff();
  const double s = branch_shift(prm);
  const double k2 = double(k) * double(k);
  const double r = std::sqrt(prm.xi * re * k2 / te + s * s);

  EigenPair ep;
  ep.k = k;
  ep.r = r;
  ep.lambda1 = prm.xi * k2 + s - r;
  ep.lambda2 = prm.xi * k2 + s + r;

  // Eigenvector normalization chosen so that the forward/adjoint pairs are
  // exactly biorthonormal and the adjoint first components are +-1/sqrt(tau r).
  const double n = prm.mushy() ? 8.0 : 4.0;
  const double pref = 1.0 / (n * std::sqrt(prm.tau * r));
  const double tr2 = 2.0 * te * r;
  ep.psi1 = Vec2{(1.0 - re + tr2) * pref, n * pref};
  ep.psi2 = Vec2{(1.0 - re - tr2) * pref, n * pref};
  ep.phi1 = Vec2{n * pref, (re - 1.0 + tr2) * pref};
  ep.phi2 = Vec2{-n * pref, -(re - 1.0 - tr2) * pref};
  return ep;
}

double resonance_expression(const Parameters& prm, int k, int l) {
  const double re = prm.rho_eff();
  const double te = prm.tau_eff();
  const double d2 = double(l) * l - double(k) * k;
  const double s2 = double(l) * l + double(k) * k;
  return prm.xi * prm.xi * te * te * d2 * d2 - 2.0 * prm.xi * re * te * s2 - 2.0 * re - 1.0;
}

SimplicityReport check_simplicity(const Parameters& prm, double safety_margin) {
  prm.validate();
  SimplicityReport rep;
  rep.j = branch_offset_closed(prm);

  const double re = prm.rho_eff();
  const double te = prm.tau_eff();
  const int j = rep.j;

  // Smallest k0 from which the slow branch at k + j + 1 is guaranteed past
  // the fast branch at k, so collisions can only involve k < k0. Needs
  // k0 (2 k0 + j + 1) >= cst / (xi (j+1) rhs); solve the quadratic, then
  // nudge down/up to the exact integer threshold.
  const double rhs = 0.5 * (1.0 - std::sqrt(re / (double(j + 1) * (j + 1) * prm.xi * te)));
  const double cst = std::pow((re + 1.0) / (2.0 * te), 2) * std::sqrt(te / (prm.xi * re));
  auto bound_met = [&](double k) {
    return cst / (prm.xi * double(j + 1) * k * (2.0 * k + j + 1)) <= rhs;
  };
  const double target = cst / (prm.xi * double(j + 1) * rhs);
  double root = (-(j + 1.0) + std::sqrt(double(j + 1) * (j + 1) + 8.0 * target)) / 4.0;
  long long k0 = std::max(1LL, static_cast<long long>(std::ceil(root)));
  while (k0 > 1 && bound_met(double(k0 - 1))) --k0;
  while (!bound_met(double(k0))) ++k0;
  rep.k0_bound = static_cast<int>(std::min<long long>(k0, 1LL << 30));

  rep.min_abs_expr = std::numeric_limits<double>::infinity();
  for (int k = 1; k < k0; ++k) {
    const int l = k + j + 1;
    const double e = resonance_expression(prm, k, l);
    const double scale = prm.xi * prm.xi * te * te * std::pow(double(l) * l - double(k) * k, 2) +
                         2.0 * prm.xi * re * te * (double(l) * l + double(k) * k) + 2.0 * re + 1.0;
    const double margin = safety_margin >= 0.0 ? safety_margin : 1e-9 * std::max(1.0, scale);
    rep.margin = std::max(rep.margin, margin);
    rep.min_abs_expr = std::min(rep.min_abs_expr, std::abs(e));
    if (std::abs(e) <= margin) {
      rep.holds = false;
      rep.witnesses.emplace_back(k, l);
    }
  }
  if (k0 <= 1) rep.min_abs_expr = std::numeric_limits<double>::infinity();
  return rep;
}

GapReport check_gap(const Parameters& prm) {
  prm.validate();
  GapReport rep;
  const double ratio = prm.rho_eff() / prm.tau_eff();  // equals rho/tau for every c
  const int jmax = static_cast<int>(std::ceil(std::sqrt(ratio / prm.xi))) + 1;
  for (int j = 1; j <= jmax; ++j) {
    const double bnd = ratio / (double(j) * j);
    if (std::abs(prm.xi - bnd) <= 1e-12 * std::max(1.0, bnd)) {
      rep.holds = false;
      rep.violating_j = j;
      return rep;
    }
  }
  rep.j_star = branch_offset_closed(prm);
  return rep;
}

SpectrumTable build_spectrum(const Parameters& prm, int N) {
  prm.validate();
  if (N < 1) throw std::invalid_argument("build_spectrum: N must be >= 1");
  const SimplicityReport simple = check_simplicity(prm);
  if (!simple.holds)
    throw std::invalid_argument("build_spectrum: spectrum is not simple for these parameters");

  SpectrumTable table;
  table.params = prm;
  table.N = N;
  table.pairs.resize(static_cast<std::size_t>(N));
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t i) {
    table.pairs[i] = eigen_pair(prm, static_cast<int>(i) + 1);
  });

  table.merged.reserve(2 * static_cast<std::size_t>(N));
  for (const auto& ep : table.pairs) {
    table.merged.push_back({ep.lambda1, ep.k, 1});
    table.merged.push_back({ep.lambda2, ep.k, 2});
  }
  std::sort(table.merged.begin(), table.merged.end(),
            [](const LambdaEntry& a, const LambdaEntry& b) { return a.value < b.value; });
  for (std::size_t i = 1; i < table.merged.size(); ++i) {
    const double gap = table.merged[i].value - table.merged[i - 1].value;
    if (!(gap > 0.0))
      throw std::invalid_argument("build_spectrum: duplicate eigenvalue in merge");
  }

  SpectrumDiagnostics& d = table.diag;
  const GapReport gap = check_gap(prm);
  d.j_star = gap.holds ? gap.j_star : branch_offset_closed(prm);
  d.k0_bound = simple.k0_bound;
  const int j = d.j_star;

  // Empirical start of the interleaving lambda_{k+j}^(1) < lambda_k^(2) <
  // lambda_{k+1+j}^(1): smallest k0 such that the pattern holds to the end of
  // the table.
  auto interleaves_at = [&](int k) {
    if (k + j + 1 > N) return true;  // out of table, vacuous
    const double l2k = table.lambda(k, 2);
    return table.lambda(k + j, 1) < l2k && l2k < table.lambda(k + j + 1, 1);
  };
  int k0 = N + 1;
  for (int start = 1; start <= N; ++start) {
    bool ok = true;
    for (int k = start; k <= N - j - 1 && ok; ++k) ok = interleaves_at(k);
    if (ok) {
      k0 = start;
      break;
    }
  }
  d.k0 = k0;

  // Empirical shift from which all same/cross-branch differences dominate
  // (xi/2)|k^2 - l^2|.
  auto pair_gap_ok = [&](int k, int l) {
    const double bound = 0.5 * prm.xi * std::abs(double(k) * k - double(l) * l);
    const double g11 = std::abs(table.lambda(k, 1) - table.lambda(l, 1));
    const double g22 = std::abs(table.lambda(k, 2) - table.lambda(l, 2));
    const double g21 = std::abs(table.lambda(k, 2) - table.lambda(l, 1));
    const double g12 = std::abs(table.lambda(l, 2) - table.lambda(k, 1));
    return g11 >= bound && g22 >= bound && g21 >= bound && g12 >= bound;
  };
  int k1 = N;  // worst case: no shift works inside the table
  for (int shift = 1; shift <= N - 1; ++shift) {
    bool ok = true;
    for (int k = 1; k <= N && ok; ++k)
      for (int l = k + shift; l <= N && ok; ++l) ok = pair_gap_ok(k, l);
    if (ok) {
      k1 = shift;
      break;
    }
  }
  d.k1 = k1;

  d.q = std::max({2 * d.k0 + j - 1, 2 * d.k1 + 2 * j + 1, 6 * j + 3});
  d.delta_branch = 0.5 * prm.xi;
  d.delta_merged = prm.xi / 16.0;

  d.min_cross_gap = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= N; ++k)
    for (int l = 1; l <= N; ++l)
      d.min_cross_gap = std::min(d.min_cross_gap,
                                 std::abs(table.lambda(k, 2) - table.lambda(l, 1)));

  d.p = 2.0 / std::sqrt(prm.xi);
  const double re = prm.rho_eff();
  const double te = prm.tau_eff();
  d.alpha = std::max(
      (std::sqrt(re / te) + std::sqrt((3.0 * re + 4.0) / te)) / (2.0 * std::sqrt(prm.xi)) + 2.0,
      std::sqrt(re / (prm.xi * te)));

  d.sum_inv_lambda = 0.0;
  for (const auto& e : table.merged) d.sum_inv_lambda += 1.0 / e.value;
  return table;
}

CountReport counting_bounds(const Parameters& prm, double r) {
  prm.validate();
  if (!(r > 0.0)) throw std::invalid_argument("counting_bounds: r must be positive");
  CountReport rep;
  const double sq = std::sqrt(r / prm.xi);
  const double re = prm.rho_eff();
  const double te = prm.tau_eff();

  for (int k = 1;; ++k) {
    const EigenPair ep = eigen_pair(prm, k);
    const bool in1 = ep.lambda1 <= r;
    const bool in2 = ep.lambda2 <= r;
    if (in1) rep.n1 = k;
    if (in2) rep.n2 = k;
    if (!in1 && !in2) break;
  }

  rep.n1_lower = sq - 1.0;
  rep.n1_upper = sq + std::sqrt(re / (prm.xi * te));
  rep.n2_lower = sq - (std::sqrt(re / te) + std::sqrt((3.0 * re + 4.0) / te)) /
                          (2.0 * std::sqrt(prm.xi)) - 1.0;
  rep.n2_upper = sq;
  return rep;
}

double resonant_xi(double rho, double tau, int k, int l, int c) {
  Parameters prm{1.0, rho, tau, c};
  prm.validate();
  const double re = prm.rho_eff();
  const double te = prm.tau_eff();
  const double d2 = double(l) * l - double(k) * k;
  const double s2 = double(l) * l + double(k) * k;
  // positive root of (te*d2)^2 x^2 - 2 re te s2 x - (2 re + 1)
  const double a = te * te * d2 * d2;
  const double b = -2.0 * re * te * s2;
  const double cc = -(2.0 * re + 1.0);
  return (-b + std::sqrt(b * b - 4.0 * a * cc)) / (2.0 * a);
}

}  // namespace pfc
