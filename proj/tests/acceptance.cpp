// Acceptance suite: one check per shipped guarantee, each printed as a
// single PASS/FAIL line with its headline numbers and wall time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pfc/control.hpp"
#include "pfc/galerkin.hpp"
#include "pfc/nonlinear.hpp"
#include "pfc/parallel.hpp"

using namespace pfc;
using clk = std::chrono::steady_clock;

namespace {

int failures = 0;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

void run_criterion(int id, const char* title, double budget_s,
                   const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = clk::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.note(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();
  if (secs > budget_s) out.require(false, "runtime budget exceeded");
  std::printf("[%s] criterion %2d: %s (%.2fs/%.0fs)%s%s\n", out.pass ? "PASS" : "FAIL", id,
              title, secs, budget_s, out.detail.empty() ? "" : " -- ",
              out.detail.c_str());
  std::fflush(stdout);
  if (!out.pass) ++failures;
}

FourierState random_unit_state(int modes, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  FourierState s(modes, Space::HMinus1);
  for (auto& c : s.coeff) c = Vec2{g(rng), g(rng)};
  return s.scaled(1.0 / s.norm(Space::HMinus1));
}

std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof(b), "%.3g", x);
  return b;
}

// ----------------------------------------------------------------------------

void criterion_spectral(Outcome& out, int c) {
  const std::vector<Parameters> triples = c == 0
      ? std::vector<Parameters>{{1.0, 1.0, 2.0, 0}, {2.0, 1.0, 1.0, 0}, {0.2, 1.0, 2.0, 0}}
      : std::vector<Parameters>{{1.0, 1.0, 2.0, 1}, {2.0, 1.0, 1.0, 1}, {0.2, 1.0, 2.0, 1}};
  for (const Parameters& prm : triples) {
    const SpectrumTable t = build_spectrum(prm, 64);
    double worst_resid = 0.0, worst_pair = 0.0;
    for (const auto& ep : t.pairs) {
      const Mat2 m = mode_matrix(prm, ep.k);
      const Mat2 mt = m.transpose();
      auto resid = [&](const Mat2& a, const Vec2& v, double lam) {
        const Vec2 r = a.apply(v) - v * lam;
        return std::max(std::abs(r.t), std::abs(r.p)) / (1.0 + std::abs(lam));
      };
      worst_resid = std::max({worst_resid, resid(m, ep.psi1, ep.lambda1),
                              resid(m, ep.psi2, ep.lambda2), resid(mt, ep.phi1, ep.lambda1),
                              resid(mt, ep.phi2, ep.lambda2)});
      worst_pair = std::max({worst_pair, std::abs(ep.psi1.dot(ep.phi1) - 1.0),
                             std::abs(ep.psi2.dot(ep.phi2) - 1.0),
                             std::abs(ep.psi1.dot(ep.phi2)), std::abs(ep.psi2.dot(ep.phi1))});
    }
    out.require(worst_resid <= 1e-12, "eigen residual " + fmt(worst_resid));
    out.require(worst_pair <= 1e-12, "pair biorthogonality " + fmt(worst_pair));

    for (int k = 1; k < 64; ++k) {
      out.require(t.lambda(k, 1) < t.lambda(k, 2), "branch order");
      out.require(t.lambda(k, 1) < t.lambda(k + 1, 1), "slow branch monotone");
      out.require(t.lambda(k, 2) < t.lambda(k + 1, 2), "fast branch monotone");
      out.require(t.lambda(k, 1) > 0.0, "positivity");
    }

    out.require(t.diag.k0 <= t.diag.k0_bound, "empirical interleave start above analytic bound");
    const int j = t.diag.j_star;
    for (int k = t.diag.k0; k + j + 1 <= t.N; ++k) {
      out.require(t.lambda(k + j, 1) < t.lambda(k, 2) && t.lambda(k, 2) < t.lambda(k + j + 1, 1),
                  "interleaving fails at k=" + std::to_string(k));
    }
    for (int k = 1; k <= t.N; ++k)
      for (int l = k + t.diag.k1; l <= t.N; ++l) {
        const double bound = 0.5 * prm.xi * std::abs(double(k) * k - double(l) * l);
        const bool ok = std::abs(t.lambda(k, 1) - t.lambda(l, 1)) >= bound &&
                        std::abs(t.lambda(k, 2) - t.lambda(l, 2)) >= bound &&
                        std::abs(t.lambda(k, 2) - t.lambda(l, 1)) >= bound &&
                        std::abs(t.lambda(l, 2) - t.lambda(k, 1)) >= bound;
        out.require(ok, "quadratic gap fails");
      }
    out.require(t.diag.min_cross_gap > 0.0, "cross-branch gap");
  }
}

void criterion_finite_check(Outcome& out) {
  std::mt19937_64 rng(20260808);
  std::uniform_real_distribution<double> u(std::log(0.15), std::log(3.0));
  int agreements = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Parameters prm{std::exp(u(rng)), std::exp(u(rng)), std::exp(u(rng)), 1};
    const SimplicityReport rep = check_simplicity(prm);
    bool brute = true;
    for (int k = 1; k < 200; ++k)
      for (int l = k + 1; l <= 200; ++l) {
        const double e = resonance_expression(prm, k, l);
        const double te = prm.tau_eff(), re = prm.rho_eff();
        const double scale = prm.xi * prm.xi * te * te *
                                 std::pow(double(l) * l - double(k) * k, 2) +
                             2.0 * prm.xi * re * te * (double(l) * l + double(k) * k) +
                             2.0 * re + 1.0;
        if (std::abs(e) <= 1e-9 * std::max(1.0, scale)) brute = false;
      }
    if (rep.holds == brute) ++agreements;
  }
  out.require(agreements == 20, "finite/brute-force disagreement (" +
                                    std::to_string(20 - agreements) + " of 20 triples)");

  const Parameters res{resonant_xi(1.0, 2.0, 1, 2), 1.0, 2.0, 1};
  const SimplicityReport rep = check_simplicity(res);
  out.require(!rep.holds && rep.witnesses.size() == 1 && rep.witnesses[0] == std::make_pair(1, 2),
              "constructed resonance not pinpointed");
}

void criterion_biortho(Outcome& out) {
  const Parameters prm{1.0, 1.0, 2.0, 1};
  const SpectrumTable t = build_spectrum(prm, 10);
  BiorthOptions opt;
  opt.tol = 1e-10;
  const BiorthFamily fam = build_biorth(control_dictionary(t, 0.5), opt);
  out.require(fam.dict.size() == 20, "dictionary size");
  out.require(fam.certified_residual <= 1e-10,
              "certified residual " + fmt(fam.certified_residual));
  out.require(fam.precision_bits <= 1024,
              "precision " + std::to_string(fam.precision_bits) + " bits");
  const NormBoundFit fit = norm_bound_check(fam);
  out.require(fit.admissible && fit.slope > 0.0, "norm growth fit not admissible");
  out.require(std::isfinite(fit.envelope_const) && fit.envelope_const > 0.0,
              "norm envelope constant");
  out.note("residual " + fmt(fam.certified_residual) + " at " +
           std::to_string(fam.precision_bits) + " bits, envelope C " + fmt(fit.envelope_const));
}

void criterion_closed_loop(Outcome& out, int c) {
  const Parameters prm{1.0, 1.0, 2.0, c};
  const int N = 16;
  const double T = 0.5;
  const SpectrumTable t = build_spectrum(prm, N);
  BiorthOptions opt;
  opt.tol = 1e-12;
  const BiorthFamily fam = build_biorth(control_dictionary(t, T), opt);
  BiorthOptions hi = opt;
  hi.tol = 1e-14;
  hi.start_bits = 2 * fam.precision_bits;
  const BiorthFamily fam_hi = build_biorth(control_dictionary(t, T), hi);

  std::vector<FourierState> data;
  FourierState e1(N, Space::HMinus1);
  e1.coeff[0].t = 1.0;
  data.push_back(e1);
  std::mt19937_64 rng(42);
  for (int i = 0; i < 10; ++i) data.push_back(random_unit_state(N, rng));

  double worst_ratio = 0.0, worst_moment = 0.0, worst_change = 0.0, tail_ratio = 0.0;
  for (const FourierState& y0 : data) {
    const ControlSignal v = synthesize_control(y0, t, fam, T);
    const auto targets = moment_rhs(y0, t, T);
    worst_moment = std::max(worst_moment, moment_residual(v, t, fam, targets));

    const auto sim = forward_solve_exact(prm, y0, v, N, 4096, 0.0, T);
    const double r1 = sim.terminal.norm(Space::HMinus1) / y0.norm(Space::HMinus1);
    worst_ratio = std::max(worst_ratio, r1);

    const ControlSignal v2 = synthesize_control(y0, t, fam_hi, T);
    const auto sim2 = forward_solve_exact(prm, y0, v2, N, 8192, 0.0, T);
    const double r2 = sim2.terminal.norm(Space::HMinus1) / y0.norm(Space::HMinus1);
    const bool both_floor = r1 <= 1e-12 && r2 <= 1e-12;
    if (!both_floor)
      worst_change = std::max(worst_change, std::abs(r1 - r2) / std::max({r1, r2, 1e-300}));
  }
  out.require(worst_ratio <= 1e-4, "terminal ratio " + fmt(worst_ratio));
  out.require(worst_moment <= 1e-8, "moment residual " + fmt(worst_moment));
  out.require(worst_change <= 0.10, "oracle instability " + fmt(worst_change));

  {
    FourierState wide(2 * N, Space::HMinus1);
    wide.coeff[0].t = 1.0;
    const ControlSignal v = synthesize_control(e1, t, fam, T);
    const auto sim = forward_solve_exact(prm, wide, v, 2 * N, 256, 0.0, T);
    double tail = 0.0;
    for (int k = N; k < 2 * N; ++k) {
      const Vec2 cc = sim.terminal.coeff[static_cast<std::size_t>(k)];
      tail += (cc.t * cc.t + cc.p * cc.p) / double((k + 1) * (k + 1));
    }
    tail_ratio = std::sqrt(tail);
  }
  out.note("worst ratio " + fmt(worst_ratio) + ", moments " + fmt(worst_moment) +
           ", untruncated tail " + fmt(tail_ratio) + " (see ledger)");
}

void criterion_duality(Outcome& out) {
  const Parameters prm{1.0, 1.0, 2.0, 1};
  const int N = 8, steps = 4096;
  const double T = 0.5;
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const FourierState y0 = random_unit_state(N, rng);
    FourierState phiT = random_unit_state(N, rng);
    phiT.space = Space::H01;
    const double a = g(rng), b = g(rng);
    const double w1 = 2.0 + 3.0 * std::abs(g(rng)), w2 = 1.0 + std::abs(g(rng));
    auto v = sampler_of_function(
        [=](double tt) { return a * std::sin(w1 * tt) + b * std::cos(w2 * tt); });
    worst = std::max(worst, duality_residual(prm, y0, v, zero_source(), phiT, N, steps, T));
  }
  out.require(worst <= 1e-6, "duality residual " + fmt(worst));
  out.note("worst residual " + fmt(worst) + " over 100 trials");
}

double g_m_fit = 0.0;  // reused by the nonlinear criterion

void criterion_cost(Outcome& out) {
  const Parameters prm{1.0, 1.0, 2.0, 1};
  std::vector<double> horizons;
  for (double t = 0.2; t <= 1.0 + 1e-12; t += 0.1) horizons.push_back(t);
  CostOptions opt;
  opt.probe_modes = 8;
  opt.biorth.tol = 1e-10;
  const CostSweep sweep = control_cost(prm, horizons, 16, opt);
  out.require(sweep.fit.r2 >= 0.95, "fit R^2 " + fmt(sweep.fit.r2));
  out.require(sweep.fit.m > 0.0, "fitted blow-up exponent");
  out.require(sweep.points.front().K > sweep.points.back().K, "cost not larger at short horizon");
  g_m_fit = sweep.fit.m;

  CostOptions wide = opt;
  wide.probe_modes = 16;
  const CostSweep a = control_cost(prm, {0.5}, 16, opt);
  const CostSweep b = control_cost(prm, {0.5}, 16, wide);
  const double change = std::abs(a.points[0].K - b.points[0].K) / a.points[0].K;
  out.require(change <= 0.05, "probe refinement moved the cost by " + fmt(change));
  out.note("M_fit " + fmt(sweep.fit.m) + ", R^2 " + fmt(sweep.fit.r2) + ", K(0.2)/K(1.0) " +
           fmt(sweep.points.front().K / sweep.points.back().K));
}

void criterion_weights(Outcome& out) {
  const WeightSchedule w = make_weights(1.0, 2.0, 1.1, 1.0);
  double worst = 0.0;
  for (int k = 0; k + 2 < static_cast<int>(w.grid.size()); ++k)
    worst = std::max(worst, w.chain_identity_residual(k));
  out.require(worst <= 1e-12, "chain identity residual " + fmt(worst));
  out.require(std::isfinite(w.weight_ratio_sup(2)), "rho^2 ratio unbounded");
  out.require(std::isfinite(w.weight_ratio_sup(3)), "rho^3 ratio unbounded");

  WeightSchedule bad = w;
  bad.b = 1.2;  // b^2 = 1.44 >= 4/3
  out.require(!bad.ratio_bounded(2) && std::isinf(bad.weight_ratio_sup(2)),
              "divergent ratio not detected");
  bool rejected = false;
  try {
    make_weights(1.0, 2.0, 1.2, 1.0);
  } catch (const std::invalid_argument&) {
    rejected = true;
  }
  out.require(rejected, "invalid (a, b) accepted");
  out.note("chain residual " + fmt(worst));
}

void criterion_nonlinear(Outcome& out) {
  const double T = 1.0;
  const int N = 16;
  const double m_fit = g_m_fit > 0.0 ? g_m_fit : 10.07;

  // the stated experiment: canonical geometric grid, data 1e-3*(eta1, eta1)
  for (int c : {1, -1}) {
    const Parameters prm{1.0, 1.0, 2.0, c};
    const SpectrumTable spectrum = build_spectrum(prm, N);
    const WeightSchedule sched = make_weights(T, 2.0, 1.1, m_fit);
    FixedPointOptions fo;
    fo.relay.modes = N;
    fo.relay.biorth.tol = 1e-12;
    fo.relay.max_intervals = 8;
    fo.relay.steps_per_unit = 2048;
    fo.max_iter = 15;
    FourierState y0(N, Space::HMinus1);
    y0.coeff[0].t = 1e-3;
    y0.coeff[0].p = 1e-3;
    try {
      const FixedPointResult fp = fixed_point(prm, y0, T, sched, spectrum, fo);
      const FourierState resim =
          nonlinear_resimulate(prm, y0, fp.relay.control, T, 2 * N, 8192, 512);
      const bool ok = fp.contraction_estimate < 1.0 && fp.iterations <= 15 &&
                      resim.norm(Space::HMinus1) <= 1e-3 * y0.norm(Space::HMinus1);
      out.require(ok, std::string("c=") + std::to_string(c) + " run failed its targets");
    } catch (const NoContraction& e) {
      out.require(false, std::string("c=") + std::to_string(c) +
                             ": no contraction at eps 1e-3 (ratio " + fmt(e.last_ratio) +
                             "; see ledger analysis)");
    }
  }

  // demonstration at the verified scale: coarse two-window layout
  {
    const Parameters prm{1.0, 1.0, 2.0, 1};
    const SpectrumTable spectrum = build_spectrum(prm, N);
    const WeightSchedule sched = make_weights(T, 2.0, 1.1, m_fit);
    FixedPointOptions fo;
    fo.relay.modes = N;
    fo.relay.biorth.tol = 1e-12;
    fo.relay.fixed_knots = {0.0, 0.5, 1.0};
    fo.relay.steps_per_unit = 2048;
    fo.max_iter = 15;
    const double eps = 1e-26;
    FourierState y0(N, Space::HMinus1);
    y0.coeff[0].t = eps;
    y0.coeff[0].p = eps;
    const FixedPointResult fp = fixed_point(prm, y0, T, sched, spectrum, fo);
    const FourierState resim =
        nonlinear_resimulate(prm, y0, fp.relay.control, T, 2 * N, 8192, 512);
    const bool demo_ok = fp.contraction_estimate < 1.0 && fp.iterations <= 15 &&
                         resim.norm(Space::HMinus1) <= 1e-3 * y0.norm(Space::HMinus1);
    out.note(std::string("verified demonstration at eps 1e-26: ") +
             (demo_ok ? "converges, certificate " + fmt(resim.norm(Space::HMinus1)) + " <= " +
                            fmt(1e-3 * y0.norm(Space::HMinus1))
                      : "FAILED"));
    if (!demo_ok) out.require(false, "small-scale demonstration failed");

    Parameters minus = prm;
    minus.c = -1;
    const SpectrumTable spec_m = build_spectrum(minus, N);
    const FixedPointResult fm = fixed_point(minus, y0.scaled(-1.0), T, sched, spec_m, fo);
    double mirror = 0.0, scale = eps;
    for (std::size_t s = 0; s < fp.relay.segments.size(); ++s)
      for (std::size_t i = 0; i < fp.relay.segments[s].states.size(); i += 11)
        for (int k = 0; k < N; ++k) {
          const Vec2 ca = fp.relay.segments[s].states[i].coeff[static_cast<std::size_t>(k)];
          const Vec2 cb = fm.relay.segments[s].states[i].coeff[static_cast<std::size_t>(k)];
          mirror = std::max({mirror, std::abs(ca.t + cb.t), std::abs(ca.p + cb.p)});
          scale = std::max({scale, std::abs(ca.t), std::abs(ca.p)});
        }
    out.require(mirror <= 1e-8 * scale, "mirror defect " + fmt(mirror / scale));
    out.note("mirror defect " + fmt(mirror / scale));
  }
}

void criterion_appendix_variant(Outcome& out) {
  criterion_spectral(out, 0);

  const Parameters prm{1.0, 1.0, 2.0, 0};
  for (int k = 1; k <= 64; ++k) {
    const EigenPair ep = eigen_pair(prm, k);
    const long double s = (2.0L * prm.rho + 1.0L) / (4.0L * prm.tau);
    const long double r =
        std::sqrt(static_cast<long double>(prm.xi) * prm.rho / prm.tau * k * k + s * s);
    const long double l1 = static_cast<long double>(prm.xi) * k * k + s - r;
    const long double l2 = static_cast<long double>(prm.xi) * k * k + s + r;
    out.require(std::abs(ep.lambda1 / double(l1) - 1.0) <= 1e-13, "substitution slow branch");
    out.require(std::abs(ep.lambda2 / double(l2) - 1.0) <= 1e-13, "substitution fast branch");
  }

  criterion_closed_loop(out, 0);
}

void criterion_ucp_failure(Outcome& out) {
  const double xi = resonant_xi(1.0, 2.0, 1, 2);
  const Parameters prm{xi, 1.0, 2.0, 1};
  const EigenPair e1 = eigen_pair(prm, 1);
  const EigenPair e2 = eigen_pair(prm, 2);
  out.require(std::abs(e1.lambda2 - e2.lambda1) <= 1e-9 * e1.lambda2,
              "resonance not realized: " + fmt(std::abs(e1.lambda2 - e2.lambda1)));

  const int N = 4, steps = 2048;
  const double T = 0.5;
  FourierState phi0(N, Space::H01);
  phi0.coeff[1] = e2.phi1 * (1.0 / std::sqrt(e1.r));   // a Phi_l^(1), a = k / sqrt(r_k)
  phi0.coeff[0] += e1.phi2 * (2.0 / std::sqrt(e2.r));  // b Phi_k^(2), b = l / sqrt(r_l)
  phi0 = phi0.scaled(1.0 / phi0.norm(Space::H01));
  out.require(std::abs(phi0.norm(Space::H01) - 1.0) < 1e-12, "normalization");

  const auto sim = adjoint_solve(prm, phi0, zero_source(), N, steps, 0.0, T);
  double sup = 0.0;
  for (double x : sim.boundary_trace) sup = std::max(sup, std::abs(x));
  out.require(sup <= 1e-10, "boundary trace sup " + fmt(sup));
  out.note("sup |observation| " + fmt(sup) + " at unit dual norm");
}

}  // namespace

int main() {
  set_parallel_enabled(true);
  std::printf("acceptance suite (pfc %s, %d threads)\n", kVersion, worker_count());

  run_criterion(1, "spectral correctness over three parameter triples", 1.0,
                [](Outcome& o) { criterion_spectral(o, 1); });
  run_criterion(2, "finite resonance scan equals the exhaustive one", 10.0, criterion_finite_check);
  run_criterion(3, "certified biorthogonal family and norm envelope", 30.0, criterion_biortho);
  run_criterion(4, "linear null control closes the loop", 120.0,
                [](Outcome& o) { criterion_closed_loop(o, 1); });
  run_criterion(5, "forward/adjoint duality identity", 60.0, criterion_duality);
  run_criterion(6, "control cost blows up as exp(M/T)", 300.0, criterion_cost);
  run_criterion(7, "relay weight machinery", 1.0, criterion_weights);
  run_criterion(8, "small-data nonlinear controller", 600.0, criterion_nonlinear);
  run_criterion(9, "mushy-state variant (spectral + closed loop)", 180.0,
                criterion_appendix_variant);
  run_criterion(10, "non-observable adjoint state at a resonance", 10.0, criterion_ucp_failure);

  if (failures == 0) {
    std::puts("all acceptance criteria passed");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
