#pragma once

#include <mpfr.h>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace pfc::mp {

/// RAII value type over mpfr_t. Binary operators round to the wider of the
/// two operand precisions; in-place ops keep the target precision.
class Real {
 public:
  explicit Real(long bits = 128) {
    mpfr_init2(v_, bits);
    mpfr_set_zero(v_, 1);
  }
  Real(double d, long bits) {
    mpfr_init2(v_, bits);
    mpfr_set_d(v_, d, MPFR_RNDN);
  }
  Real(const Real& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  Real(Real&& o) noexcept {
    mpfr_init2(v_, 2);
    mpfr_swap(v_, o.v_);
  }
  Real& operator=(const Real& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  Real& operator=(Real&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~Real() { mpfr_clear(v_); }

  long bits() const { return mpfr_get_prec(v_); }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  std::string str(int digits = 40) const;

  mpfr_ptr raw() { return v_; }
  mpfr_srcptr raw() const { return v_; }

  void set(double d) { mpfr_set_d(v_, d, MPFR_RNDN); }
  void set(const Real& o) { mpfr_set(v_, o.v_, MPFR_RNDN); }
  void set_zero() { mpfr_set_zero(v_, 1); }

  int sign() const { return mpfr_sgn(v_); }
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }

  Real& operator+=(const Real& o) {
    mpfr_add(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator-=(const Real& o) {
    mpfr_sub(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator*=(const Real& o) {
    mpfr_mul(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator/=(const Real& o) {
    mpfr_div(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  /// this += a*b without an intermediate allocation.
  void add_mul(const Real& a, const Real& b) { mpfr_fma(v_, a.v_, b.v_, v_, MPFR_RNDN); }
  void sub_mul(const Real& a, const Real& b) { mpfr_fms(v_, a.v_, b.v_, v_, MPFR_RNDN); mpfr_neg(v_, v_, MPFR_RNDN); }

  friend Real operator+(const Real& a, const Real& b) {
    Real r(wider(a, b));
    mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend Real operator-(const Real& a, const Real& b) {
    Real r(wider(a, b));
    mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend Real operator*(const Real& a, const Real& b) {
    Real r(wider(a, b));
    mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend Real operator/(const Real& a, const Real& b) {
    Real r(wider(a, b));
    mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend Real operator-(const Real& a) {
    Real r(a.bits());
    mpfr_neg(r.v_, a.v_, MPFR_RNDN);
    return r;
  }
  friend int cmp(const Real& a, const Real& b) { return mpfr_cmp(a.v_, b.v_); }

 private:
  static long wider(const Real& a, const Real& b) {
    return a.bits() > b.bits() ? a.bits() : b.bits();
  }
  mpfr_t v_;
};

inline Real sqrt(const Real& a) {
  Real r(a.bits());
  mpfr_sqrt(r.raw(), a.raw(), MPFR_RNDN);
  return r;
}
inline Real exp(const Real& a) {
  Real r(a.bits());
  mpfr_exp(r.raw(), a.raw(), MPFR_RNDN);
  return r;
}
inline Real expm1(const Real& a) {
  Real r(a.bits());
  mpfr_expm1(r.raw(), a.raw(), MPFR_RNDN);
  return r;
}
inline Real abs(const Real& a) {
  Real r(a.bits());
  mpfr_abs(r.raw(), a.raw(), MPFR_RNDN);
  return r;
}
Real from_string(const std::string& s, long bits);

/// Dense matrix of Reals at a uniform precision.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, long bits)
      : r_(rows), c_(cols), bits_(bits), a_(rows * cols, Real(bits)) {}

  std::size_t rows() const { return r_; }
  std::size_t cols() const { return c_; }
  long bits() const { return bits_; }

  Real& at(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
  const Real& at(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }

 private:
  std::size_t r_ = 0, c_ = 0;
  long bits_ = 0;
  std::vector<Real> a_;
};

using Vec = std::vector<Real>;

/// In-place lower Cholesky factorization. Returns false on a non-positive
/// pivot (matrix not numerically SPD at this precision).
bool cholesky(Mat& g);

/// Solves L L^T x = b in place, L lower triangular from cholesky().
void cholesky_solve(const Mat& l, Vec& b);

}  // namespace pfc::mp
