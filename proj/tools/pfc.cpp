// Command-line front end: spectrum diagnostics, boundary control synthesis
// with closed-loop verification, control-cost sweeps, the nonlinear
// small-data controller, and plain simulation runs.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pfc/control.hpp"
#include "pfc/galerkin.hpp"
#include "pfc/io.hpp"
#include "pfc/nonlinear.hpp"

namespace fs = std::filesystem;
using namespace pfc;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNotSimple = 2;      // cross-branch resonance found
constexpr int kExitGapDegenerate = 3;  // spectral gap condition violated
constexpr int kExitPrecision = 4;

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  long seed = 0;
  long precision_bits = 0;  // 0: use config / defaults
};

io::Config load_config(const Common& c) {
  io::Config cfg = io::Config::parse_file(c.config_path);
  cfg.parameters();  // validate early
  return cfg;
}

BiorthOptions biorth_options(const io::Config& cfg, const Common& c) {
  BiorthOptions opt;
  opt.start_bits = c.precision_bits > 0 ? c.precision_bits
                                        : cfg.integer_or("precision_bits", 256);
  opt.bits_cap = cfg.integer_or("precision_cap", 4096);
  opt.tol = cfg.number_or("tol_biorth", 1e-12);
  return opt;
}

fs::path out_file(const Common& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / name;
}

ordered_json meta(const io::Config& cfg) {
  return ordered_json{{"config_hash", cfg.hash()},
                      {"generator", std::string("pfc ") + kVersion}};
}

int cmd_spectrum(const Common& c) {
  const io::Config cfg = load_config(c);
  const Parameters prm = cfg.parameters();
  const int n = static_cast<int>(cfg.integer_or("N", 64));

  const GapReport gap = check_gap(prm);
  const SimplicityReport simple = check_simplicity(prm, cfg.number_or("resonance_margin", -1.0));
  if (!gap.holds || !simple.holds) {
    ordered_json j;
    j["meta"] = meta(cfg);
    j["gap_condition"] = gap.holds;
    if (gap.violating_j) j["violating_j"] = *gap.violating_j;
    j["simple_spectrum"] = simple.holds;
    auto w = ordered_json::array();
    for (auto [k, l] : simple.witnesses) w.push_back(ordered_json{{"k", k}, {"l", l}});
    j["witnesses"] = std::move(w);
    io::write_text(out_file(c, "spectrum.json").string(), j.dump(2) + "\n");
    if (!gap.holds) {
      std::fprintf(stderr, "spectral gap condition fails at j = %d\n",
                   gap.violating_j.value_or(-1));
      return kExitGapDegenerate;
    }
    std::fprintf(stderr, "spectrum is not simple (%zu resonances found)\n",
                 simple.witnesses.size());
    return kExitNotSimple;
  }

  const SpectrumTable table = build_spectrum(prm, n);
  io::write_text(out_file(c, "spectrum.json").string(), io::spectrum_json(table, cfg));
  io::write_text(out_file(c, "diagnostics.csv").string(), io::spectrum_csv(table, cfg));
  std::printf("spectrum: N=%d, j*=%d, k0=%d (bound %d), k1=%d, q=%d\n", n, table.diag.j_star,
              table.diag.k0, table.diag.k0_bound, table.diag.k1, table.diag.q);
  return kExitOk;
}

int demonstrate_ucp_failure(const Common& c, const io::Config& cfg, const Parameters& prm) {
  // at a cross-branch resonance the adjoint has a nonzero terminal state with
  // an identically vanishing boundary observation
  const SimplicityReport rep = check_simplicity(prm);
  if (rep.holds || rep.witnesses.empty()) {
    std::fprintf(stderr, "--demonstrate-ucp-failure requires resonant parameters\n");
    return kExitConfig;
  }
  const auto [k, l] = rep.witnesses.front();
  const double T = cfg.number_or("T", 0.5);
  const int modes = std::max(l, static_cast<int>(cfg.integer_or("N", 8)));
  const EigenPair ek = eigen_pair(prm, k);
  const EigenPair el = eigen_pair(prm, l);

  FourierState phi0(modes, Space::H01);
  const double a = k / std::sqrt(ek.r);
  const double b = l / std::sqrt(el.r);
  phi0.coeff[static_cast<std::size_t>(l - 1)] = el.phi1 * a;
  phi0.coeff[static_cast<std::size_t>(k - 1)] += ek.phi2 * b;
  phi0 = phi0.scaled(1.0 / phi0.norm(Space::H01));

  const int steps = static_cast<int>(cfg.integer_or("steps", 2048));
  const auto sim = adjoint_solve(prm, phi0, zero_source(), modes, steps, 0.0, T);
  double sup = 0.0;
  for (double x : sim.boundary_trace) sup = std::max(sup, std::abs(x));

  ordered_json j;
  j["meta"] = meta(cfg);
  j["resonant_pair"] = ordered_json{{"k", k}, {"l", l}};
  j["lambda"] = ek.lambda2;
  j["phi0_h01_norm"] = phi0.norm(Space::H01);
  j["boundary_trace_sup"] = sup;
  io::write_text(out_file(c, "ucp_failure.json").string(), j.dump(2) + "\n");
  io::write_text(out_file(c, "ucp_adjoint.csv").string(), io::simulation_csv(sim, cfg));
  std::printf("non-observable adjoint state built: sup |trace| = %.3e at unit dual norm\n", sup);
  return sup <= 1e-8 ? kExitOk : kExitConfig;
}

int cmd_control_linear(const Common& c, const std::string& y0_path, double patch_horizon,
                       bool ucp_demo) {
  const io::Config cfg = load_config(c);
  const Parameters prm = cfg.parameters();
  if (ucp_demo) return demonstrate_ucp_failure(c, cfg, prm);
  if (y0_path.empty()) {
    std::fprintf(stderr, "control-linear: --y0 is required\n");
    return kExitConfig;
  }

  const GapReport gap = check_gap(prm);
  if (!gap.holds) return kExitGapDegenerate;
  const SimplicityReport simple = check_simplicity(prm);
  if (!simple.holds) return kExitNotSimple;

  const int n = static_cast<int>(cfg.integer_or("N", 16));
  const double T = cfg.number_or("T", 0.5);
  const SpectrumTable table = build_spectrum(prm, n);
  const BiorthFamily fam =
      build_biorth(control_dictionary(table, patch_horizon > 0.0 ? patch_horizon : T),
                   biorth_options(cfg, c));

  const FourierState y0 = io::load_state(y0_path, n, Space::HMinus1);
  SynthesisOptions so;
  if (patch_horizon > 0.0) so.patch_horizon = patch_horizon;
  const ControlSignal v = synthesize_control(y0, table, fam, T, so);
  const auto targets = moment_rhs(y0, table, patch_horizon > 0.0 ? patch_horizon : T);
  const double resid = v.is_zero() ? 0.0 : moment_residual(v, table, fam, targets);

  const int snaps = static_cast<int>(cfg.integer_or("steps", 4096));
  const auto sim = forward_solve_exact(prm, y0, v, n, snaps, 0.0, T);
  const double n0 = y0.norm(Space::HMinus1);
  const double ratio = n0 > 0.0 ? sim.terminal.norm(Space::HMinus1) / n0 : 0.0;

  io::write_text(out_file(c, "control.csv").string(), io::control_csv(v, cfg));
  io::write_text(out_file(c, "control.json").string(), io::control_json(v, cfg));
  io::write_text(out_file(c, "family.csv").string(), io::biorth_csv(fam, cfg));
  io::write_text(out_file(c, "closedloop.csv").string(), io::simulation_csv(sim, cfg));
  io::write_text(out_file(c, "terminal_profile.csv").string(),
                 io::profile_csv(sim.terminal, static_cast<int>(cfg.integer_or("grid_points", 512)), cfg));

  ordered_json rep;
  rep["meta"] = meta(cfg);
  rep["control_l2"] = v.l2_norm();
  rep["moment_residual"] = resid;
  rep["initial_hm1"] = n0;
  rep["terminal_hm1"] = sim.terminal.norm(Space::HMinus1);
  rep["terminal_ratio"] = ratio;
  rep["family_bits"] = fam.precision_bits;
  rep["family_residual"] = fam.certified_residual;
  io::write_text(out_file(c, "report.json").string(), rep.dump(2) + "\n");
  std::printf("control: ||v|| = %.6e, terminal ratio = %.3e, moment residual = %.3e\n",
              v.l2_norm(), ratio, resid);
  return kExitOk;
}

int cmd_cost_sweep(const Common& c) {
  const io::Config cfg = load_config(c);
  const Parameters prm = cfg.parameters();
  if (!check_gap(prm).holds) return kExitGapDegenerate;
  if (!check_simplicity(prm).holds) return kExitNotSimple;

  const int n = static_cast<int>(cfg.integer_or("N", 16));
  const double t0 = cfg.number_or("cost_t_min", 0.2);
  const double t1 = cfg.number_or("cost_t_max", 1.0);
  const double dt = cfg.number_or("cost_t_step", 0.1);
  std::vector<double> horizons;
  for (double t = t0; t <= t1 + 1e-12; t += dt) horizons.push_back(t);

  CostOptions opt;
  opt.probe_modes = static_cast<int>(cfg.integer_or("probe_modes", 8));
  opt.biorth = biorth_options(cfg, c);
  const CostSweep sweep = control_cost(prm, horizons, n, opt);
  io::write_text(out_file(c, "cost.csv").string(), io::cost_csv(sweep, cfg));
  std::printf("cost sweep: M_fit = %.4f, log C0 = %.4f, R^2 = %.4f\n", sweep.fit.m,
              sweep.fit.log_c0, sweep.fit.r2);
  return kExitOk;
}

int cmd_control_nonlinear(const Common& c, const std::string& y0_path) {
  const io::Config cfg = load_config(c);
  const Parameters prm = cfg.parameters();
  if (!check_gap(prm).holds) return kExitGapDegenerate;
  if (!check_simplicity(prm).holds) return kExitNotSimple;

  const int n = static_cast<int>(cfg.integer_or("N", 16));
  const double T = cfg.number_or("T", 1.0);
  const SpectrumTable table = build_spectrum(prm, n);

  const double a = cfg.number_or("weights.a", 2.0);
  const double b = cfg.number_or("weights.b", 1.1);
  double m = 1.0;
  if (cfg.text_or("weights.M", "fit") == "fit") {
    CostOptions copt;
    copt.probe_modes = std::min(4, n);
    copt.biorth = biorth_options(cfg, c);
    const CostSweep sweep = control_cost(prm, {0.4 * T, 0.6 * T, 0.8 * T, T}, n, copt);
    m = std::max(1.0, sweep.fit.m);
  } else {
    m = cfg.number_or("weights.M", 1.0);
  }
  const WeightSchedule sched = make_weights(T, a, b, m);

  FixedPointOptions fo;
  fo.relay.modes = n;
  fo.relay.biorth = biorth_options(cfg, c);
  fo.relay.steps_per_unit = static_cast<int>(cfg.integer_or("steps", 4096)) /
                            std::max(1, static_cast<int>(T));
  fo.relay.max_intervals = static_cast<int>(cfg.integer_or("relay_max_intervals", 8));
  fo.max_iter = static_cast<int>(cfg.integer_or("fp_max_iter", 15));
  fo.weighted_metric = cfg.integer_or("fp_weighted_metric", 1) != 0;
  if (cfg.has("relay_knots")) {
    std::istringstream in(cfg.text_or("relay_knots", ""));
    double x;
    fo.relay.fixed_knots.clear();
    while (in >> x) fo.relay.fixed_knots.push_back(x);
  }
  fo.nonlin_grid = static_cast<int>(cfg.integer_or("grid_points", 512));

  FourierState y0 = io::load_state(y0_path, n, Space::HMinus1);

  // back-off: halve the datum until the iteration contracts, report the
  // verified scale
  int halvings = 0;
  const int max_halvings = static_cast<int>(cfg.integer_or("fp_max_halvings", 6));
  FixedPointResult fp;
  while (true) {
    try {
      fp = fixed_point(prm, y0, T, sched, table, fo);
      break;
    } catch (const NoContraction& e) {
      if (++halvings > max_halvings) {
        std::fprintf(stderr, "no contraction after %d halvings (last ratio %.3e)\n", halvings,
                     e.last_ratio);
        return kExitConfig;
      }
      y0 = y0.scaled(0.5);
    }
  }

  const FourierState resim = nonlinear_resimulate(
      prm, y0, fp.relay.control, T, 2 * n,
      static_cast<int>(cfg.integer_or("steps", 4096)), fo.nonlin_grid);

  std::ostringstream itcsv;
  itcsv << io::file_header(cfg);
  itcsv << "n,log_f_norm,log_delta,ratio,terminal_hm1\n";
  for (const auto& l : fp.log)
    itcsv << l.n << ',' << l.log_f_norm << ',' << l.log_delta_norm << ',' << l.ratio << ','
          << l.terminal_norm << "\n";
  io::write_text(out_file(c, "iterations.csv").string(), itcsv.str());
  io::write_text(out_file(c, "control.csv").string(),
                 io::piecewise_control_csv(fp.relay.control, cfg));

  ordered_json man;
  man["meta"] = meta(cfg);
  man["halvings"] = halvings;
  man["initial_hm1"] = y0.norm(Space::HMinus1);
  man["iterations"] = fp.iterations;
  man["contraction_estimate"] = fp.contraction_estimate;
  man["terminal_hm1"] = fp.relay.terminal.norm(Space::HMinus1);
  man["resimulated_terminal_hm1"] = resim.norm(Space::HMinus1);
  man["truncation_residual"] = fp.relay.truncation_residual;
  man["log_control_weighted"] = fp.relay.log_control_weighted_norm;
  man["log_state_weighted"] = fp.relay.log_state_weighted_norm;
  man["weights"] = ordered_json{{"a", a}, {"b", b}, {"M", m}};
  auto knots = ordered_json::array();
  for (double t : fp.relay.knots) knots.push_back(t);
  man["knots"] = std::move(knots);
  io::write_text(out_file(c, "manifest.json").string(), man.dump(2) + "\n");
  std::printf("nonlinear control: converged in %d sweeps (contraction %.3e, %d halvings), "
              "terminal %.3e / resimulated %.3e\n",
              fp.iterations, fp.contraction_estimate, halvings,
              fp.relay.terminal.norm(Space::HMinus1), resim.norm(Space::HMinus1));
  return kExitOk;
}

int cmd_simulate(const Common& c, const std::string& y0_path, const std::string& v_path) {
  const io::Config cfg = load_config(c);
  const Parameters prm = cfg.parameters();
  const int n = static_cast<int>(cfg.integer_or("N", 16));
  const double T = cfg.number_or("T", 1.0);
  const int steps = static_cast<int>(cfg.integer_or("steps", 4096));

  const FourierState y0 = io::load_state(y0_path, n, Space::HMinus1);
  SignalSampler v = zero_signal();
  if (!v_path.empty()) {
    // sampled trace (t, v) on a uniform grid; cubic interpolation in between
    std::vector<double> ts, vs;
    {
      std::ifstream f(v_path);
      std::string line;
      while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        ts.push_back(std::stod(line.substr(0, comma)));
        vs.push_back(std::stod(line.substr(comma + 1)));
      }
    }
    if (ts.size() < 4) throw std::runtime_error("simulate: control trace too short");
    v = sampler_of_function([ts, vs](double t) {
      const double h = ts[1] - ts[0];
      long j = std::lround(std::floor((t - ts[0]) / h)) - 1;
      j = std::max(0L, std::min<long>(j, static_cast<long>(ts.size()) - 4));
      // 4-point Lagrange interpolation
      double acc = 0.0;
      for (long a = 0; a < 4; ++a) {
        double w = 1.0;
        for (long b = 0; b < 4; ++b)
          if (a != b) w *= (t - ts[static_cast<std::size_t>(j + b)]) /
                           (ts[static_cast<std::size_t>(j + a)] - ts[static_cast<std::size_t>(j + b)]);
        acc += w * vs[static_cast<std::size_t>(j + a)];
      }
      return acc;
    });
  }
  const auto sim = forward_solve(prm, y0, v, zero_source(), n, steps, 0.0, T);
  io::write_text(out_file(c, "simulation.csv").string(), io::simulation_csv(sim, cfg));
  if (cfg.integer_or("dump_states", 0) != 0)
    io::write_text(out_file(c, "simulation.json").string(), io::simulation_json(sim, cfg));
  io::write_text(out_file(c, "terminal_profile.csv").string(),
                 io::profile_csv(sim.terminal, static_cast<int>(cfg.integer_or("grid_points", 512)), cfg));
  std::printf("simulate: terminal H^-1 = %.6e\n", sim.terminal.norm(Space::HMinus1));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boundary control synthesis for the coupled phase-field system"};
  app.require_subcommand(1);

  Common common;
  std::string y0_path, v_path;
  double patch_horizon = 0.0;
  bool ucp_demo = false;

  auto add_common = [&](CLI::App* sub, bool needs_y0 = false) {
    sub->add_option("--config", common.config_path, "key = value configuration file")
        ->required();
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--seed", common.seed, "seed for randomized helpers");
    sub->add_option("--precision-bits", common.precision_bits,
                    "starting precision of the certified solves");
    if (needs_y0)
      sub->add_option("--y0", y0_path, "initial state (JSON coefficients or CSV samples)");
  };

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalue table and diagnostics");
  add_common(spectrum);
  auto* lin = app.add_subcommand("control-linear", "moment-method null control, closed loop");
  add_common(lin, true);
  lin->add_option("--patch-horizon", patch_horizon,
                  "synthesize on [0, h] and extend by zero");
  lin->add_flag("--demonstrate-ucp-failure", ucp_demo,
                "build the non-observable adjoint state at resonant parameters");
  auto* cost = app.add_subcommand("cost-sweep", "empirical control cost against the horizon");
  add_common(cost);
  auto* nl = app.add_subcommand("control-nonlinear", "small-data relay controller");
  add_common(nl, true);
  auto* sim = app.add_subcommand("simulate", "forward run under a given control");
  add_common(sim, true);
  sim->add_option("--v", v_path, "control trace CSV (t, v)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (spectrum->parsed()) return cmd_spectrum(common);
    if (lin->parsed()) return cmd_control_linear(common, y0_path, patch_horizon, ucp_demo);
    if (cost->parsed()) return cmd_cost_sweep(common);
    if (nl->parsed()) return cmd_control_nonlinear(common, y0_path);
    if (sim->parsed()) return cmd_simulate(common, y0_path, v_path);
  } catch (const PrecisionExhausted& e) {
    std::fprintf(stderr, "precision ceiling reached: %s\n", e.what());
    return kExitPrecision;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
