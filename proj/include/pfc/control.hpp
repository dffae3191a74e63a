#pragma once

#include <optional>
#include <vector>

#include "pfc/biortho.hpp"
#include "pfc/signal.hpp"
#include "pfc/spectral.hpp"
#include "pfc/types.hpp"

namespace pfc {

/// Moment targets for the reversed control u(t) = v(T-t): one value per
/// (mode, branch), stored branch-major per mode (c[2(k-1)], c[2(k-1)+1]).
/// The sign convention is the one that steers the state to zero, which is
/// verified against the simulator in the tests.
std::vector<double> moment_rhs(const FourierState& y0, const SpectrumTable& spectrum, double T);

/// Dictionary of the merged spectrum at a given horizon.
ExponentialDictionary control_dictionary(const SpectrumTable& spectrum, double T);

struct SynthesisOptions {
  std::optional<double> patch_horizon;  // synthesize on [0, h], zero afterwards
};

/// Moment-method null control: weights the biorthogonal atoms by the moment
/// targets mapped through the merged-index provenance; returns v(t) = u(T-t)
/// with its closed-form L2 norm.
ControlSignal synthesize_control(const FourierState& y0, const SpectrumTable& spectrum,
                                 const BiorthFamily& fam, double T,
                                 const SynthesisOptions& opt = {});

/// Residuals of the moment equations, evaluated in extended precision:
/// max over (k,j) of |int_0^T e^{-lambda t} u(t) dt - c_kj|.
double moment_residual(const ControlSignal& v, const SpectrumTable& spectrum,
                       const BiorthFamily& fam, const std::vector<double>& targets);

struct CostPoint {
  double T = 0.0;
  double K = 0.0;  // max control norm over the probe basis
};
struct CostFit {
  double log_c0 = 0.0;
  double m = 0.0;  // slope against 1/T
  double r2 = 0.0;
};
struct CostSweep {
  std::vector<CostPoint> points;
  CostFit fit;
};

struct CostOptions {
  int probe_modes = 8;
  BiorthOptions biorth;
};

/// Empirical control cost over a canonical probe basis of unit dual-norm
/// initial data, with the affine fit of log K against 1/T.
CostSweep control_cost(const Parameters& prm, const std::vector<double>& horizons, int N,
                       const CostOptions& opt = {});

CostFit fit_cost_curve(const std::vector<CostPoint>& pts);

}  // namespace pfc
