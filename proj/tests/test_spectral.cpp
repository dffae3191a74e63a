#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pfc/spectral.hpp"

using namespace pfc;

namespace {

// independent closed-form evaluation in extended precision
struct EigRef {
  long double l1, l2, r;
};
EigRef eig_ref(long double xi, long double rho, long double tau, int c, int k) {
  const long double re = c == 0 ? 2 * rho : rho;
  const long double te = c == 0 ? 2 * tau : tau;
  const long double s = (re + 1) / (2 * te);
  const long double kk = static_cast<long double>(k) * k;
  const long double r = std::sqrt(xi * re * kk / te + s * s);
  return {xi * kk + s - r, xi * kk + s + r, r};
}

double resonance_ref(double xi, double rho, double tau, int c, int k, int l) {
  const double re = c == 0 ? 2 * rho : rho;
  const double te = c == 0 ? 2 * tau : tau;
  const double d2 = double(l) * l - double(k) * k;
  const double s2 = double(l) * l + double(k) * k;
  return xi * xi * te * te * d2 * d2 - 2.0 * xi * re * te * s2 - 2.0 * re - 1.0;
}

}  // namespace

TEST_CASE("closed-form eigenvalues at the reference triple") {
  Parameters prm{1.0, 1.0, 2.0, 1};
  const EigenPair ep = eigen_pair(prm, 1);
  CHECK(ep.r == doctest::Approx(std::sqrt(0.75)).epsilon(1e-14));
  CHECK(ep.lambda1 == doctest::Approx(0.6339745962155614).epsilon(1e-14));
  CHECK(ep.lambda2 == doctest::Approx(2.3660254037844386).epsilon(1e-14));

  const EigRef ref = eig_ref(1.0L, 1.0L, 2.0L, 1, 1);
  CHECK(std::abs(ep.lambda1 - double(ref.l1)) < 1e-15);
  CHECK(std::abs(ep.lambda2 - double(ref.l2)) < 1e-15);
}

TEST_CASE("gap identity and pair biorthogonality across random parameters") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 40; ++trial) {
    Parameters prm{u(rng), u(rng), u(rng), trial % 3 - 1};
    for (int k : {1, 2, 7, 33}) {
      const EigenPair ep = eigen_pair(prm, k);
      CHECK(ep.lambda2 - ep.lambda1 == doctest::Approx(2.0 * ep.r).epsilon(1e-13));
      CHECK(ep.lambda1 > 0.0);
      CHECK(std::abs(ep.psi1.dot(ep.phi1) - 1.0) < 1e-12);
      CHECK(std::abs(ep.psi2.dot(ep.phi2) - 1.0) < 1e-12);
      CHECK(std::abs(ep.psi1.dot(ep.phi2)) < 1e-12);
      CHECK(std::abs(ep.psi2.dot(ep.phi1)) < 1e-12);
    }
  }
}

TEST_CASE("eigenvectors solve the mode matrix and its transpose") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.2, 2.5);
  for (int trial = 0; trial < 25; ++trial) {
    Parameters prm{u(rng), u(rng), u(rng), trial % 3 - 1};
    for (int k : {1, 3, 16, 64}) {
      const EigenPair ep = eigen_pair(prm, k);
      const Mat2 m = mode_matrix(prm, k);
      const Mat2 mt = m.transpose();
      auto resid = [](const Mat2& a, const Vec2& v, double lam) {
        const Vec2 r = a.apply(v) - v * lam;
        return std::max(std::abs(r.t), std::abs(r.p));
      };
      const double tol1 = 1e-12 * (1.0 + std::abs(ep.lambda1));
      const double tol2 = 1e-12 * (1.0 + std::abs(ep.lambda2));
      CHECK(resid(m, ep.psi1, ep.lambda1) < tol1);
      CHECK(resid(m, ep.psi2, ep.lambda2) < tol2);
      CHECK(resid(mt, ep.phi1, ep.lambda1) < tol1);
      CHECK(resid(mt, ep.phi2, ep.lambda2) < tol2);
    }
  }
}

TEST_CASE("mushy-state eigenvalues equal the doubled-parameter formulas") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.2, 2.5);
  for (int trial = 0; trial < 20; ++trial) {
    Parameters prm{u(rng), u(rng), u(rng), 0};
    for (int k : {1, 2, 9, 40}) {
      const EigenPair ep = eigen_pair(prm, k);
      const EigRef ref = eig_ref(prm.xi, prm.rho, prm.tau, 0, k);
      CHECK(std::abs(ep.lambda1 / double(ref.l1) - 1.0) < 1e-13);
      CHECK(std::abs(ep.lambda2 / double(ref.l2) - 1.0) < 1e-13);
    }
  }
}

TEST_CASE("eigen_pair rejects bad input") {
  CHECK_THROWS_AS(eigen_pair(Parameters{1, 1, 2, 1}, 0), std::invalid_argument);
  CHECK_THROWS_AS(eigen_pair(Parameters{-1, 1, 2, 1}, 1), std::invalid_argument);
  CHECK_THROWS_AS(eigen_pair(Parameters{1, 1, 2, 5}, 1), std::invalid_argument);
}

TEST_CASE("gap condition check") {
  const GapReport a = check_gap(Parameters{1.0, 1.0, 2.0, 1});
  CHECK(a.holds);
  CHECK(a.j_star == 0);

  const GapReport b = check_gap(Parameters{0.5, 1.0, 2.0, 1});
  CHECK_FALSE(b.holds);
  REQUIRE(b.violating_j.has_value());
  CHECK(*b.violating_j == 1);

  const GapReport c = check_gap(Parameters{0.2, 1.0, 2.0, 1});
  CHECK(c.holds);
  CHECK(c.j_star == 1);  // 0.125 < 0.2 < 0.5
}

TEST_CASE("simplicity check at the reference triple") {
  const SimplicityReport rep = check_simplicity(Parameters{1.0, 1.0, 2.0, 1});
  CHECK(rep.holds);
  CHECK(rep.witnesses.empty());
  // the k=1, l=2 resonance polynomial evaluates to 4*9 - 4*5 - 3 = 13
  CHECK(resonance_expression(Parameters{1.0, 1.0, 2.0, 1}, 1, 2) == doctest::Approx(13.0));
}

TEST_CASE("finite simplicity scan agrees with brute force") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.9, 1.1);  // log-uniform 0.15..3
  for (int trial = 0; trial < 6; ++trial) {
    Parameters prm{std::exp(u(rng)), std::exp(u(rng)), std::exp(u(rng)), 1};
    const SimplicityReport rep = check_simplicity(prm);
    bool brute = true;
    for (int k = 1; k < 200; ++k)
      for (int l = k + 1; l <= 200; ++l) {
        const double e = resonance_ref(prm.xi, prm.rho, prm.tau, prm.c, k, l);
        const double scale =
            prm.xi * prm.xi * prm.tau * prm.tau * std::pow(double(l) * l - double(k) * k, 2) +
            2.0 * prm.xi * prm.rho * prm.tau * (double(l) * l + double(k) * k) +
            2.0 * prm.rho + 1.0;
        if (std::abs(e) <= 1e-9 * std::max(1.0, scale)) brute = false;
      }
    CHECK(rep.holds == brute);
  }
}

TEST_CASE("resonant parameters are detected as witnesses") {
  const double xi = resonant_xi(1.0, 2.0, 1, 2);
  Parameters prm{xi, 1.0, 2.0, 1};
  CHECK(std::abs(resonance_expression(prm, 1, 2)) < 1e-9);
  const SimplicityReport rep = check_simplicity(prm);
  CHECK_FALSE(rep.holds);
  REQUIRE(rep.witnesses.size() == 1);
  CHECK(rep.witnesses[0].first == 1);
  CHECK(rep.witnesses[0].second == 2);
  CHECK_THROWS_AS(build_spectrum(prm, 8), std::invalid_argument);
}

TEST_CASE("spectrum table: merge, interleaving, gap diagnostics") {
  Parameters prm{1.0, 1.0, 2.0, 1};
  const SpectrumTable t = build_spectrum(prm, 32);

  REQUIRE(t.merged.size() == 64);
  for (std::size_t i = 1; i < t.merged.size(); ++i)
    CHECK(t.merged[i].value > t.merged[i - 1].value);

  // leading merged values from the closed forms
  CHECK(t.merged[0].value == doctest::Approx(0.6339745962).epsilon(1e-9));
  CHECK(t.merged[1].value == doctest::Approx(2.3660254038).epsilon(1e-9));
  CHECK(t.merged[2].value == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(t.merged[2].k == 2);
  CHECK(t.merged[2].branch == 1);

  // each merged entry carries faithful provenance
  for (const auto& e : t.merged)
    CHECK(e.value == doctest::Approx(t.lambda(e.k, e.branch)).epsilon(1e-15));

  CHECK(t.diag.j_star == 0);
  CHECK(t.diag.k0 >= 1);
  CHECK(t.diag.k0 <= t.diag.k0_bound);
  CHECK(t.diag.min_cross_gap > 0.0);

  // quadratic gap bound from the empirical shift
  for (int k = 1; k <= t.N; ++k)
    for (int l = k + t.diag.k1; l <= t.N; ++l) {
      const double bound = 0.5 * prm.xi * std::abs(double(k) * k - double(l) * l);
      CHECK(std::abs(t.lambda(k, 1) - t.lambda(l, 1)) >= bound);
      CHECK(std::abs(t.lambda(k, 2) - t.lambda(l, 2)) >= bound);
      CHECK(std::abs(t.lambda(k, 2) - t.lambda(l, 1)) >= bound);
    }

  // merged-sequence quadratic gap at its own (weaker) level
  const int q = t.diag.q;
  for (std::size_t i = 0; i < t.merged.size(); ++i)
    for (std::size_t j = i + static_cast<std::size_t>(q); j < t.merged.size(); ++j) {
      const double ki = double(i + 1), kj = double(j + 1);
      CHECK(t.merged[j].value - t.merged[i].value >=
            t.diag.delta_merged * (kj * kj - ki * ki) * (1.0 - 1e-12));
    }

  // inverse-eigenvalue tail: increments of the partial sums fall like 1/m^2
  double cmax = 0.0;
  for (std::size_t m = 0; m < t.merged.size(); ++m)
    cmax = std::max(cmax, double(m + 1) * double(m + 1) / t.merged[m].value);
  CHECK(cmax < 16.0 / prm.xi);
}

TEST_CASE("interleaving pattern for an offset branch (j* = 1)") {
  Parameters prm{0.2, 1.0, 2.0, 1};
  const SpectrumTable t = build_spectrum(prm, 48);
  CHECK(t.diag.j_star == 1);
  CHECK(t.diag.k0 <= t.diag.k0_bound);
  const int j = t.diag.j_star;
  for (int k = t.diag.k0; k + j + 1 <= t.N; ++k) {
    CHECK(t.lambda(k + j, 1) < t.lambda(k, 2));
    CHECK(t.lambda(k, 2) < t.lambda(k + j + 1, 1));
  }
}

TEST_CASE("counting function and sandwich bounds") {
  Parameters prm{1.0, 1.0, 2.0, 1};
  const CountReport rep = counting_bounds(prm, 100.0);
  CHECK(rep.n1 == 10);
  CHECK(rep.n2 == 9);
  CHECK(rep.n1 > rep.n1_lower);
  CHECK(double(rep.n1) <= rep.n1_upper);
  CHECK(rep.n1_lower == doctest::Approx(9.0));
  CHECK(rep.n1_upper == doctest::Approx(10.0 + std::sqrt(0.5)).epsilon(1e-12));
  CHECK(double(rep.n2) >= rep.n2_lower);
  CHECK(double(rep.n2) <= rep.n2_upper);

  // brute-force count and the counting-constant deviation
  const SpectrumTable t = build_spectrum(prm, 50);
  long count = 0;
  for (const auto& e : t.merged)
    if (e.value <= 100.0) ++count;
  CHECK(count == rep.n1 + rep.n2);
  CHECK(std::abs(t.diag.p * 10.0 - double(count)) <= t.diag.alpha);

  const CountReport below = counting_bounds(prm, 0.5 * t.lambda(1, 1));
  CHECK(below.n1 == 0);
  CHECK(below.n2 == 0);
}

TEST_CASE("counting bounds hold across random parameters and radii") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.2, 2.5);
  std::uniform_real_distribution<double> ur(1.0, 400.0);
  for (int trial = 0; trial < 20; ++trial) {
    Parameters prm{u(rng), u(rng), u(rng), trial % 2};
    const double r = ur(rng);
    const CountReport rep = counting_bounds(prm, r);
    // independent scan
    long n1 = 0, n2 = 0;
    for (int k = 1; k < 200; ++k) {
      const EigenPair ep = eigen_pair(prm, k);
      if (ep.lambda1 <= r) n1 = k;
      if (ep.lambda2 <= r) n2 = k;
    }
    CHECK(rep.n1 == n1);
    CHECK(rep.n2 == n2);
    CHECK(double(rep.n1) > rep.n1_lower);
    CHECK(double(rep.n1) <= rep.n1_upper + 1e-12);
    CHECK(double(rep.n2) >= rep.n2_lower - 1e-12);
    CHECK(double(rep.n2) <= rep.n2_upper + 1e-12);
  }
}
