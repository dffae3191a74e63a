#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "pfc/types.hpp"

namespace pfc {

/// Closed-form eigendata of the mode-k generator k^2 D + A and its adjoint.
/// psi1/psi2 span the eigenspaces of the forward matrix, phi1/phi2 those of
/// the transpose, normalized so that <psi_i, phi_j> = delta_ij.
struct EigenPair {
  int k = 0;
  double lambda1 = 0.0;  // slow branch
  double lambda2 = 0.0;  // fast branch
  double r = 0.0;        // half gap, lambda2 - lambda1 = 2r
  Vec2 psi1, psi2;
  Vec2 phi1, phi2;
};

EigenPair eigen_pair(const Parameters& prm, int k);

/// First eigenvector component of the adjoint pair, the factor through which
/// the boundary observation sees mode (k, branch j).
inline double adjoint_first_component(const Parameters& prm, const EigenPair& ep, int branch) {
  const double s = 1.0 / std::sqrt(prm.tau * ep.r);
  return branch == 1 ? s : -s;
}

/// Simplicity of the spectrum across branches (equivalently, approximate
/// controllability from the boundary). The scan is the finite one: candidate
/// collisions can only happen for k below an explicit threshold and
/// l = k + j + 1.
struct SimplicityReport {
  bool holds = true;
  std::vector<std::pair<int, int>> witnesses;  // (k, l) with |expr| <= margin
  int k0_bound = 1;                            // analytic scan threshold
  int j = 0;                                   // branch offset used in the scan
  double min_abs_expr = 0.0;                   // smallest |expr| over the scan
  double margin = 0.0;                         // margin actually applied
};

/// Resonance polynomial whose zeros are exactly the cross-branch collisions
/// lambda_l^(1) == lambda_k^(2); scaled as a polynomial in (xi*tau_eff).
double resonance_expression(const Parameters& prm, int k, int l);

SimplicityReport check_simplicity(const Parameters& prm, double safety_margin = -1.0);

/// Spectral gap condition xi != rho/(j^2 tau) (all j >= 1). When it holds,
/// j_star is the unique j with rho/((j+1)^2 tau) < xi < rho/(j^2 tau).
struct GapReport {
  bool holds = true;
  int j_star = 0;
  std::optional<int> violating_j;
};

GapReport check_gap(const Parameters& prm);

struct LambdaEntry {
  double value = 0.0;
  int k = 0;
  int branch = 0;  // 1 or 2
};

struct SpectrumDiagnostics {
  int j_star = 0;       // branch offset (0 when xi > rho/tau)
  int k0 = 0;           // empirical start of the interleaving pattern
  int k0_bound = 0;     // analytic bound on k0 (empirical <= analytic)
  int k1 = 0;           // empirical index shift for the quadratic gap bound
  int q = 0;            // gap index fed to the biorthogonal norm estimates
  double delta_branch = 0.0;  // per-branch quadratic gap constant (xi/2)
  double delta_merged = 0.0;  // merged-sequence gap constant (xi/16)
  double min_cross_gap = 0.0; // inf |lambda_k^(2) - lambda_l^(1)| over the table
  double p = 0.0;       // counting-function slope 2/sqrt(xi)
  double alpha = 0.0;   // counting-function deviation bound
  double sum_inv_lambda = 0.0;  // partial sum of 1/Lambda over the table
};

struct SpectrumTable {
  Parameters params;
  int N = 0;
  std::vector<EigenPair> pairs;       // k = 1..N
  std::vector<LambdaEntry> merged;    // both branches sorted increasing, 2N entries
  SpectrumDiagnostics diag;

  const EigenPair& pair(int k) const { return pairs.at(static_cast<std::size_t>(k - 1)); }
  double lambda(int k, int branch) const {
    return branch == 1 ? pair(k).lambda1 : pair(k).lambda2;
  }
};

/// Builds eigen pairs for k <= N plus the sorted merge of both branches and
/// the gap/counting diagnostics. Fails if a cross-branch collision makes the
/// merge non-strict.
SpectrumTable build_spectrum(const Parameters& prm, int N);

struct CountReport {
  long n1 = 0, n2 = 0;
  double n1_lower = 0.0, n1_upper = 0.0;
  double n2_lower = 0.0, n2_upper = 0.0;
};

/// Counts eigenvalues per branch below r together with the analytic sandwich
/// bounds on each count.
CountReport counting_bounds(const Parameters& prm, double r);

/// Positive root in xi of the resonance polynomial for the pair (k, l):
/// parameters (root, rho, tau) put lambda_l^(1) exactly on lambda_k^(2).
double resonant_xi(double rho, double tau, int k, int l, int c = 1);

}  // namespace pfc
