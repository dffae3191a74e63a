#include "pfc/control.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pfc/parallel.hpp"

namespace pfc {

std::vector<double> moment_rhs(const FourierState& y0, const SpectrumTable& spectrum, double T) {
  if (y0.modes() > spectrum.N)
    throw std::invalid_argument("moment_rhs: state has more modes than the spectrum table");
  const Parameters& prm = spectrum.params;
  std::vector<double> c(2 * static_cast<std::size_t>(spectrum.N), 0.0);
  const double root = std::sqrt(std::numbers::pi / 2.0);
  for (int k = 1; k <= spectrum.N; ++k) {
    const EigenPair& ep = spectrum.pair(k);
    const Vec2 yk = k <= y0.modes() ? y0.coeff[static_cast<std::size_t>(k - 1)] : Vec2{};
    const double base = root * std::sqrt(prm.tau * ep.r) / (k * prm.xi);
    // branch sign (-1)^j: the reversed-time moments must cancel the free
    // evolution, so each target carries the opposite sign of the projected
    // initial datum
    c[2 * static_cast<std::size_t>(k - 1)] = -base * std::exp(-ep.lambda1 * T) * yk.dot(ep.phi1);
    c[2 * static_cast<std::size_t>(k - 1) + 1] = base * std::exp(-ep.lambda2 * T) * yk.dot(ep.phi2);
  }
  return c;
}

ExponentialDictionary control_dictionary(const SpectrumTable& spectrum, double T) {
  ExponentialDictionary dict;
  dict.horizon = T;
  dict.decay.reserve(spectrum.merged.size());
  for (const auto& e : spectrum.merged) dict.decay.push_back(e.value);
  return dict;
}

namespace {

void check_family_matches(const SpectrumTable& spectrum, const BiorthFamily& fam, double T) {
  if (fam.dict.size() != spectrum.merged.size())
    throw IndexMapMismatch("control: family size does not match the merged spectrum");
  if (std::abs(fam.dict.horizon - T) > 1e-12 * std::max(1.0, T))
    throw IndexMapMismatch("control: family horizon does not match the requested horizon");
  for (std::size_t m = 0; m < fam.dict.size(); ++m)
    if (std::abs(fam.dict.decay[m] - spectrum.merged[m].value) >
        1e-12 * std::max(1.0, spectrum.merged[m].value))
      throw IndexMapMismatch("control: family dictionary diverges from the spectrum");
}

/// Moment targets reindexed through the merged (k, branch) provenance.
std::vector<double> merged_targets(const SpectrumTable& spectrum, const std::vector<double>& c) {
  std::vector<double> w(spectrum.merged.size(), 0.0);
  for (std::size_t m = 0; m < spectrum.merged.size(); ++m) {
    const LambdaEntry& e = spectrum.merged[m];
    w[m] = c[2 * static_cast<std::size_t>(e.k - 1) + static_cast<std::size_t>(e.branch - 1)];
  }
  return w;
}

}  // namespace

ControlSignal synthesize_control(const FourierState& y0, const SpectrumTable& spectrum,
                                 const BiorthFamily& fam, double T, const SynthesisOptions& opt) {
  const double horizon = opt.patch_horizon.value_or(T);
  if (opt.patch_horizon && (*opt.patch_horizon <= 0.0 || *opt.patch_horizon > T))
    throw std::invalid_argument("synthesize_control: patch horizon outside (0, T]");
  check_family_matches(spectrum, fam, horizon);

  const auto targets = moment_rhs(y0, spectrum, horizon);
  const auto w = merged_targets(spectrum, targets);
  const std::size_t m = w.size();

  bool all_zero = true;
  for (double x : w) all_zero &= (x == 0.0);
  if (all_zero) return ControlSignal::zero(T);

  const long bits = fam.coeffs.bits();
  ExpAtomSet atoms;
  atoms.horizon = horizon;
  atoms.decay = fam.dict.decay;
  atoms.weights = std::make_shared<mp::Vec>(m, mp::Real(bits));

  // u = sum_m w_m q_m; atom weights W_j = sum_m w_m coeffs(m, j)
  parallel_for(m, [&](std::size_t j) {
    mp::Real acc(bits), wm(bits);
    for (std::size_t mm = 0; mm < m; ++mm) {
      wm.set(w[mm]);
      acc.add_mul(wm, fam.coeffs.at(mm, j));
    }
    (*atoms.weights)[j] = acc;
  });

  // ||u||^2 = W^T G W; the Gram action reuses the family's certified data:
  // G W = G X^T w = (X G)^T w ~ w + residual, so compute directly instead.
  mp::Mat g = gram_matrix(fam.dict, bits);
  mp::Real norm2(bits), inner(bits);
  for (std::size_t i = 0; i < m; ++i) {
    inner.set_zero();
    for (std::size_t j = 0; j < m; ++j) inner.add_mul(g.at(i, j), (*atoms.weights)[j]);
    norm2.add_mul((*atoms.weights)[i], inner);
  }
  const double l2 = std::sqrt(std::max(0.0, norm2.to_double()));

  return ControlSignal::from_atoms(std::move(atoms), l2, T);
}

double moment_residual(const ControlSignal& v, const SpectrumTable& spectrum,
                       const BiorthFamily& fam, const std::vector<double>& targets) {
  if (v.is_zero()) {
    double mx = 0.0;
    for (double c : targets) mx = std::max(mx, std::abs(c));
    return mx;
  }
  check_family_matches(spectrum, fam, v.atoms().horizon);
  const auto w = merged_targets(spectrum, targets);
  const std::size_t m = w.size();
  const long bits = fam.coeffs.bits();
  mp::Mat g = gram_matrix(fam.dict, bits);
  std::vector<double> err(m, 0.0);
  parallel_for(m, [&](std::size_t i) {
    mp::Real acc(bits);
    for (std::size_t j = 0; j < m; ++j) acc.add_mul(g.at(i, j), (*v.atoms().weights)[j]);
    mp::Real target(w[i], bits);
    err[i] = std::abs((acc - target).to_double());
  });
  double mx = 0.0;
  for (double e : err) mx = std::max(mx, e);
  return mx;
}

CostFit fit_cost_curve(const std::vector<CostPoint>& pts) {
  CostFit fit;
  const std::size_t n = pts.size();
  if (n < 2) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : pts) {
    const double x = 1.0 / p.T;
    const double y = std::log(p.K);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double nn = static_cast<double>(n);
  const double det = nn * sxx - sx * sx;
  fit.m = (nn * sxy - sx * sy) / det;
  fit.log_c0 = (sy * sxx - sx * sxy) / det;
  double ss_res = 0.0, ss_tot = 0.0;
  const double ybar = sy / nn;
  for (const auto& p : pts) {
    const double x = 1.0 / p.T;
    const double y = std::log(p.K);
    ss_res += std::pow(y - (fit.log_c0 + fit.m * x), 2);
    ss_tot += std::pow(y - ybar, 2);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

CostSweep control_cost(const Parameters& prm, const std::vector<double>& horizons, int N,
                       const CostOptions& opt) {
  prm.validate();
  const SpectrumTable spectrum = build_spectrum(prm, N);
  const int probes = std::min(opt.probe_modes, N);

  CostSweep sweep;
  sweep.points.reserve(horizons.size());
  for (double T : horizons) {
    const BiorthFamily fam = build_biorth(control_dictionary(spectrum, T), opt.biorth);
    double worst = 0.0;
    for (int pk = 1; pk <= probes; ++pk) {
      for (int comp = 0; comp < 2; ++comp) {
        FourierState y0(N, Space::HMinus1);
        // unit H^-1 probe: coefficient k at mode k
        if (comp == 0)
          y0.coeff[static_cast<std::size_t>(pk - 1)].t = pk;
        else
          y0.coeff[static_cast<std::size_t>(pk - 1)].p = pk;
        const ControlSignal v = synthesize_control(y0, spectrum, fam, T);
        worst = std::max(worst, v.l2_norm());
      }
    }
    sweep.points.push_back({T, worst});
  }
  sweep.fit = fit_cost_curve(sweep.points);
  return sweep;
}

}  // namespace pfc
