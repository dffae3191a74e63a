#include "pfc/precise.hpp"

#include <cstdio>
#include <memory>

namespace pfc::mp {

std::string Real::str(int digits) const {
  char fmt[32];
  std::snprintf(fmt, sizeof(fmt), "%%.%dRe", digits);
  const int n = mpfr_snprintf(nullptr, 0, fmt, v_);
  std::string out(static_cast<std::size_t>(n) + 1, '\0');
  mpfr_snprintf(out.data(), out.size(), fmt, v_);
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Real from_string(const std::string& s, long bits) {
  Real r(bits);
  mpfr_set_str(r.raw(), s.c_str(), 10, MPFR_RNDN);
  return r;
}

bool cholesky(Mat& g) {
  const std::size_t n = g.rows();
  Real acc(g.bits()), tmp(g.bits());
  for (std::size_t j = 0; j < n; ++j) {
    acc.set(g.at(j, j));
    for (std::size_t k = 0; k < j; ++k) {
      tmp.set(g.at(j, k));
      tmp *= g.at(j, k);
      acc -= tmp;
    }
    if (acc.sign() <= 0) return false;
    mpfr_sqrt(g.at(j, j).raw(), acc.raw(), MPFR_RNDN);
    for (std::size_t i = j + 1; i < n; ++i) {
      acc.set(g.at(i, j));
      for (std::size_t k = 0; k < j; ++k) {
        tmp.set(g.at(i, k));
        tmp *= g.at(j, k);
        acc -= tmp;
      }
      mpfr_div(g.at(i, j).raw(), acc.raw(), g.at(j, j).raw(), MPFR_RNDN);
    }
  }
  // zero the strict upper triangle so the factor can be reused verbatim
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) g.at(i, j).set_zero();
  return true;
}

void cholesky_solve(const Mat& l, Vec& b) {
  const std::size_t n = l.rows();
  Real tmp(l.bits());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      tmp.set(l.at(i, k));
      tmp *= b[k];
      b[i] -= tmp;
    }
    b[i] /= l.at(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) {
      tmp.set(l.at(k, ii));
      tmp *= b[k];
      b[ii] -= tmp;
    }
    b[ii] /= l.at(ii, ii);
  }
}

}  // namespace pfc::mp
