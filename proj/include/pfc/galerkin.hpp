#pragma once

#include <functional>
#include <vector>

#include "pfc/signal.hpp"
#include "pfc/spectral.hpp"
#include "pfc/types.hpp"

namespace pfc {

/// Two-component source term sampled mode-wise. materialize() must return
/// the (2*steps+1) x modes array of coefficient pairs at the Simpson nodes of
/// [t0, t1] (node-major layout).
using SourceSampler =
    std::function<std::vector<Vec2>(double t0, double t1, int steps, int modes)>;

SourceSampler zero_source();
SourceSampler source_of_function(std::function<void(double, std::vector<Vec2>&)> f);

/// Source stored on a Simpson grid, matched by node count (no interpolation).
struct GridSource {
  double t0 = 0.0, t1 = 0.0;
  int steps = 0;
  int modes = 0;
  std::vector<Vec2> values;  // (2*steps+1) x modes, node-major

  SourceSampler sampler() const;
  double weighted_l2_norm(const std::function<double(double)>& inv_weight_log) const;
  /// log of the same quantity, stable when the weights span hundreds of
  /// orders of magnitude; -inf for an all-zero block.
  double log_weighted_l2_norm(const std::function<double(double)>& inv_weight_log) const;
};

struct NormRow {
  double theta_hm1 = 0, phi_hm1 = 0;
  double theta_l2 = 0, phi_l2 = 0;
  double theta_h01 = 0, phi_h01 = 0;
};

struct SimulationResult {
  double t0 = 0.0, t1 = 0.0;
  std::vector<double> grid;           // steps+1 node times
  std::vector<FourierState> states;   // snapshots at the grid nodes
  FourierState terminal;
  std::vector<NormRow> norms;
  std::vector<double> boundary_trace;  // adjoint runs: 2*steps+1 half-grid values

  int steps() const { return static_cast<int>(grid.size()) - 1; }
  const FourierState& state_at(int i) const { return states[static_cast<std::size_t>(i)]; }
};

/// Integrates the mode systems y_k' + (k^2 D + A) y_k = f_k + sqrt(2/pi) k (DB) v
/// over [t0, t1] with exact matrix-exponential steps; the forcing enters
/// through Simpson-weighted exponential quadrature (order 4).
SimulationResult forward_solve(const Parameters& prm, const FourierState& y0,
                               const SignalSampler& v, const SourceSampler& f, int modes,
                               int steps, double t0, double t1);

/// Backward solve of -w' + (k^2 D^T + A^T) w = g from t1 down to t0 with the
/// terminal state given at t1; records the boundary observation
/// sqrt(2/pi) * sum_k k xi w_{1,k}(t) on the half grid.
SimulationResult adjoint_solve(const Parameters& prm, const FourierState& phi_T,
                               const SourceSampler& g, int modes, int steps, double t0,
                               double t1);

/// |int_0^T obs(t) v(t) dt - (<y(T), phi_T> - <y0, phi(0)>)| / (1 + |rhs|).
double duality_residual(const Parameters& prm, const FourierState& y0, const SignalSampler& v,
                        const SourceSampler& f, const FourierState& phi_T, int modes, int steps,
                        double T);

/// Exact terminal state of a single mode under an atom-backed control,
/// evaluated in extended precision (reference path for integrator checks).
Vec2 modal_terminal_exact(const Parameters& prm, int k, const Vec2& y0k,
                          const ExpAtomSet& atoms, double T);

/// Source-free solve under an atom-backed control via the closed-form
/// convolution of each eigencomponent against the dictionary exponentials,
/// evaluated in the atoms' precision at every snapshot. This is the only
/// reliable route when the control amplitude dwarfs the state: the Simpson
/// path would need astronomically many steps to resolve the cancellations.
SimulationResult forward_solve_exact(const Parameters& prm, const FourierState& y0,
                                     const ControlSignal& v, int modes, int snapshots,
                                     double t0, double t1);

/// Sine synthesis of a snapshot on a uniform x grid (reconstruction export).
std::vector<std::pair<double, Vec2>> physical_profile(const FourierState& s, int grid_points);

}  // namespace pfc
