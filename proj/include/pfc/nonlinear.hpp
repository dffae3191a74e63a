#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "pfc/biortho.hpp"
#include "pfc/control.hpp"
#include "pfc/galerkin.hpp"
#include "pfc/weights.hpp"

namespace pfc {

/// Two-component source held on the relay's composite grid: one Simpson-grid
/// block per schedule interval. Blocks are keyed by the interval layout, so
/// sources produced from one relay pass feed the next without interpolation.
struct RelaySource {
  std::vector<GridSource> blocks;

  bool empty() const { return blocks.empty(); }
  double log_norm_weighted(const WeightSchedule& w) const;  // log ||f / rho_source||_{L2}
  static RelaySource zeros_like(const RelaySource& proto);
  double max_abs() const;
};

struct RelayOptions {
  int modes = 16;
  int steps_per_unit = 4096;   // step budget scaled by interval length
  int min_steps = 96;
  double stop_norm = 0.0;      // skip the interval control once ||a_k|| falls below
  int max_intervals = 16;      // schedule knots kept before the closing window
  std::vector<double> fixed_knots;  // overrides the schedule layout when set
  BiorthOptions biorth;
};

struct RelayResult {
  std::vector<double> knots;       // interval boundaries actually used (incl. 0 and T)
  std::vector<SimulationResult> segments;    // combined solution per interval
  std::vector<FourierState> handoffs;        // a_k at each interior knot
  PiecewiseControl control;
  double log_control_weighted_norm = 0.0;    // log ||v / rho_state||_{L2(0,T)}
  double log_state_weighted_norm = 0.0;      // log ||Y / rho_state||_{L2(Q)}
  double truncation_residual = 0.0;          // source-driven mass left at T
  FourierState terminal;

  const SimulationResult& segment_at(double t) const;
};

/// Cache of biorthogonal families per interval length (lengths repeat across
/// fixed-point sweeps, the expensive solves happen once).
class FamilyCache {
 public:
  FamilyCache(const SpectrumTable& spectrum, BiorthOptions opt)
      : spectrum_(&spectrum), opt_(opt) {}
  const BiorthFamily& at_horizon(double len);

 private:
  const SpectrumTable* spectrum_;
  BiorthOptions opt_;
  std::map<long long, std::unique_ptr<BiorthFamily>> cache_;
};

/// Interval relay: on each window the source-driven part restarts from zero
/// while a fresh short-horizon null control flushes the accumulated state.
RelayResult relay_control(const Parameters& prm, const FourierState& y0, const RelaySource& f,
                          const WeightSchedule& sched, const SpectrumTable& spectrum,
                          const RelayOptions& opt, FamilyCache& cache);

/// Quadratic/cubic feedback of the phase component, pseudo-spectrally
/// projected back onto the first `modes` sine modes:
///   theta source: c*(3 rho / 4 tau) phi^2 + (rho / 4 tau) phi^3
///   phi   source: -c*(3 / 2 tau)  phi^2 - (1 / 2 tau)  phi^3
/// (quadratic terms absent for c = 0).
RelaySource nonlinearity(const Parameters& prm, const RelayResult& trajectory, int grid_points,
                         int modes);

struct IterationLog {
  int n = 0;
  double log_f_norm = 0.0;      // log ||f_n||_F
  double log_delta_norm = 0.0;  // log ||f_{n+1} - f_n||_F
  double ratio = 0.0;           // contraction estimate at this step
  double terminal_norm = 0.0;
};

struct FixedPointOptions {
  RelayOptions relay;
  int max_iter = 15;
  double tol_fp = 0.0;        // absolute; 0 -> scaled from the first sweep
  int nonlin_grid = 512;
  // Contraction metric: the weighted source norm is the faithful choice but
  // only tracks the envelope on the canonical geometric grid; plain L2 is
  // the physical fallback for coarse layouts.
  bool weighted_metric = true;
};

struct FixedPointResult {
  RelaySource source;         // converged fixed point
  RelayResult relay;          // trajectory/control at the fixed point
  int iterations = 0;
  double contraction_estimate = 0.0;
  std::vector<IterationLog> log;
};

FixedPointResult fixed_point(const Parameters& prm, const FourierState& y0, double T,
                             const WeightSchedule& sched, const SpectrumTable& spectrum,
                             const FixedPointOptions& opt);

/// Independent check: integrates the full nonlinear system under a given
/// boundary control with its own stepper (exponential Heun, pseudo-spectral
/// nonlinearity on a dealiased grid) and returns the terminal state.
FourierState nonlinear_resimulate(const Parameters& prm, const FourierState& y0,
                                  const PiecewiseControl& v, double T, int modes, int steps,
                                  int grid_points);

}  // namespace pfc
