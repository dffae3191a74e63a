#include "pfc/biortho.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pfc/parallel.hpp"

namespace pfc {

void ExponentialDictionary::validate() const {
  if (decay.empty()) throw std::invalid_argument("dictionary: empty");
  if (!infinite_horizon && !(horizon > 0.0))
    throw std::invalid_argument("dictionary: horizon must be positive");
  for (std::size_t i = 0; i < decay.size(); ++i) {
    if (!(decay[i] > 0.0)) throw std::invalid_argument("dictionary: decays must be positive");
    if (i > 0 && !(decay[i] > decay[i - 1]))
      throw std::invalid_argument("dictionary: decays must be strictly increasing");
  }
}

mp::Mat gram_matrix(const ExponentialDictionary& dict, long bits) {
  dict.validate();
  const std::size_t m = dict.size();
  mp::Mat g(m, m, bits);
  // entries for i <= j, mirrored; each (i,j) owns its slot so the parallel
  // and serial paths agree exactly
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  idx.reserve(m * (m + 1) / 2);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) idx.emplace_back(i, j);
  parallel_for(idx.size(), [&](std::size_t t) {
    const auto [i, j] = idx[t];
    mp::Real sum = mp::Real(dict.decay[i], bits) + mp::Real(dict.decay[j], bits);
    if (dict.infinite_horizon) {
      mp::Real one(1.0, bits);
      g.at(i, j) = one / sum;
    } else {
      // (1 - e^{-sum T}) / sum  computed as -expm1(-sum T)/sum
      mp::Real e = mp::expm1(-(sum * mp::Real(dict.horizon, bits)));
      g.at(i, j) = (-e) / sum;
    }
  });
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < i; ++j) g.at(i, j) = g.at(j, i);
  return g;
}

namespace {

/// One Newton refinement step X <- X + X(I - G X) with the product against a
/// higher-precision Gram matrix, then the certified residual of the result.
double refine_and_certify(const mp::Mat& g_hi, mp::Mat& x, std::vector<double>& res_out) {
  const std::size_t m = x.rows();
  const long hb = g_hi.bits();

  mp::Mat r(m, m, hb);  // R = I - G X
  parallel_for(m, [&](std::size_t i) {
    mp::Real acc(hb);
    for (std::size_t j = 0; j < m; ++j) {
      acc.set_zero();
      for (std::size_t k = 0; k < m; ++k) acc.add_mul(g_hi.at(i, k), x.at(k, j));
      mpfr_d_sub(r.at(i, j).raw(), i == j ? 1.0 : 0.0, acc.raw(), MPFR_RNDN);
    }
  });
  mp::Mat x1(m, m, hb);  // X1 = X + X R
  parallel_for(m, [&](std::size_t i) {
    mp::Real acc(hb);
    for (std::size_t j = 0; j < m; ++j) {
      acc.set(x.at(i, j));
      for (std::size_t k = 0; k < m; ++k) acc.add_mul(x.at(i, k), r.at(k, j));
      x1.at(i, j) = acc;
    }
  });
  x = x1;

  res_out.assign(m * m, 0.0);
  std::vector<double> rowmax(m, 0.0);
  parallel_for(m, [&](std::size_t i) {
    mp::Real acc(hb);
    double mx = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      acc.set_zero();
      for (std::size_t k = 0; k < m; ++k) acc.add_mul(x.at(i, k), g_hi.at(k, j));
      const double rij = acc.to_double() - (i == j ? 1.0 : 0.0);
      res_out[i * m + j] = rij;
      mx = std::max(mx, std::abs(rij));
    }
    rowmax[i] = mx;
  });
  double mx = 0.0;
  for (double v : rowmax) mx = std::max(mx, v);
  return mx;
}

}  // namespace

BiorthFamily build_biorth(const ExponentialDictionary& dict, const BiorthOptions& opt) {
  dict.validate();
  const std::size_t m = dict.size();
  if (m > opt.size_cap)
    throw std::invalid_argument("build_biorth: dictionary larger than the configured cap");

  long bits = opt.start_bits;
  double achieved = std::numeric_limits<double>::infinity();
  while (true) {
    mp::Mat g = gram_matrix(dict, bits);
    mp::Mat l = g;
    if (!mp::cholesky(l)) {
      if (2 * bits > opt.bits_cap) throw PrecisionExhausted(achieved, bits);
      bits *= 2;
      continue;
    }
    // columns of the inverse; independent solves
    mp::Mat x(m, m, bits);
    parallel_for(m, [&](std::size_t j) {
      mp::Vec col(m, mp::Real(bits));
      col[j].set(1.0);
      mp::cholesky_solve(l, col);
      for (std::size_t i = 0; i < m; ++i) x.at(i, j) = col[i];
    });

    const long hb = 2 * bits;  // refinement and certification precision
    mp::Mat g_hi = gram_matrix(dict, hb);
    mp::Mat x_hi(m, m, hb);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) x_hi.at(i, j) = x.at(i, j);
    std::vector<double> res;
    achieved = refine_and_certify(g_hi, x_hi, res);

    if (achieved <= opt.tol) {
      BiorthFamily fam;
      fam.dict = dict;
      fam.precision_bits = bits;
      fam.certified_residual = achieved;
      fam.coeffs = x_hi;
      fam.residual = std::move(res);
      fam.norms.assign(m, 0.0);
      // ||q_k||^2 = (X G X^T)_kk evaluated at the certification precision
      parallel_for(m, [&](std::size_t k) {
        mp::Real acc(hb), inner(hb);
        for (std::size_t j = 0; j < m; ++j) {
          inner.set_zero();
          for (std::size_t t = 0; t < m; ++t) inner.add_mul(g_hi.at(j, t), x_hi.at(k, t));
          acc.add_mul(x_hi.at(k, j), inner);
        }
        fam.norms[k] = std::sqrt(std::max(0.0, acc.to_double()));
      });
      return fam;
    }
    if (2 * bits > opt.bits_cap) throw PrecisionExhausted(achieved, bits);
    bits *= 2;
  }
}

NormBoundFit norm_bound_check(const BiorthFamily& fam) {
  NormBoundFit fit;
  const std::size_t m = fam.dict.size();
  const double invT = fam.dict.infinite_horizon ? 0.0 : 1.0 / fam.dict.horizon;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double xk = std::sqrt(fam.dict.decay[k]) + invT;
    const double yk = std::log(fam.norms[k]);
    sx += xk;
    sy += yk;
    sxx += xk * xk;
    sxy += xk * yk;
  }
  const double n = static_cast<double>(m);
  const double det = n * sxx - sx * sx;
  if (m == 1 || std::abs(det) < 1e-30) {
    fit.slope = 0.0;
    fit.intercept = m ? std::log(fam.norms[0]) : 0.0;
    fit.envelope_const = std::max(0.0, fit.intercept);
    fit.admissible = true;  // single point: the bound holds vacuously
    return fit;
  }
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy * sxx - sx * sxy) / det;
  for (std::size_t k = 0; k < m; ++k) {
    const double xk = std::sqrt(fam.dict.decay[k]) + invT;
    const double yk = std::log(fam.norms[k]);
    fit.max_fit_residual = std::max(fit.max_fit_residual,
                                    std::abs(yk - (fit.slope * xk + fit.intercept)));
    fit.envelope_const = std::max(fit.envelope_const, yk / (xk + 1.0));
  }
  fit.envelope_const = std::max(0.0, fit.envelope_const);
  fit.admissible = fit.slope > 0.0 && std::isfinite(fit.max_fit_residual);
  return fit;
}

}  // namespace pfc
