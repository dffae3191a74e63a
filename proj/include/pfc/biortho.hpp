#pragma once

#include <cstddef>
#include <vector>

#include "pfc/precise.hpp"
#include "pfc/types.hpp"

namespace pfc {

/// Dictionary {e^{-Lambda_j t}} on (0, T). The infinite-horizon flag swaps
/// the Gram integrals for their T -> inf limits (a Cauchy matrix).
struct ExponentialDictionary {
  double horizon = 1.0;
  std::vector<double> decay;
  bool infinite_horizon = false;

  std::size_t size() const { return decay.size(); }
  void validate() const;
};

/// Gram matrix G[i][j] = integral of e^{-(L_i+L_j)t} over (0,T), assembled at
/// the requested precision. Entries close-form: (1 - e^{-(L_i+L_j)T})/(L_i+L_j).
mp::Mat gram_matrix(const ExponentialDictionary& dict, long bits);

/// Family {q_k} in span of the dictionary with int q_k e^{-L_j t} = delta_kj:
/// rows of the inverted Gram matrix. The solve escalates precision (doubling)
/// until the residual, recomputed against a higher-precision Gram matrix,
/// meets tol.
struct BiorthFamily {
  ExponentialDictionary dict;
  long precision_bits = 0;         // precision of the accepted solve
  double certified_residual = 0.0; // max_kj |int q_k e^{-L_j} - delta_kj|
  mp::Mat coeffs;                  // row k: q_k = sum_j coeffs(k,j) e^{-L_j t}
  std::vector<double> norms;       // ||q_k||_{L^2(0,T)}
  std::vector<double> residual;    // row-major M x M residual snapshot

  double residual_at(std::size_t k, std::size_t j) const {
    return residual[k * dict.size() + j];
  }
};

struct BiorthOptions {
  long start_bits = 256;
  long bits_cap = 4096;
  double tol = 1e-12;
  std::size_t size_cap = 64;
};

BiorthFamily build_biorth(const ExponentialDictionary& dict, const BiorthOptions& opt = {});

/// Affine fit of log||q_k|| against sqrt(Lambda_k) + 1/T. Admissible when the
/// growth envelope exists with a positive constant and the fit residual
/// stays bounded.
struct NormBoundFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_fit_residual = 0.0;
  double envelope_const = 0.0;  // smallest C >= 0 with log||q_k|| <= C(sqrt(L_k)+1/T)+C
  bool admissible = false;
};

NormBoundFit norm_bound_check(const BiorthFamily& fam);

}  // namespace pfc
