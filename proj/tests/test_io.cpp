#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pfc/control.hpp"
#include "pfc/galerkin.hpp"
#include "pfc/io.hpp"

using namespace pfc;
namespace fs = std::filesystem;

namespace {

io::Config demo_config() {
  return io::Config::parse_text(
      "xi = 1.0\nrho = 1.0\ntau = 2.0\nc = 1\n# comment\nT = 0.5\nN = 4\n");
}

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

}  // namespace

TEST_CASE("config parsing: values, defaults, hash stability") {
  const io::Config cfg = demo_config();
  CHECK(cfg.number("xi") == 1.0);
  CHECK(cfg.integer_or("N", 0) == 4);
  CHECK(cfg.number_or("absent", 7.5) == 7.5);
  CHECK(cfg.text_or("absent", "x") == "x");
  const Parameters prm = cfg.parameters();
  CHECK(prm.tau == 2.0);
  // hash ignores comments and ordering of identical content
  const io::Config cfg2 = io::Config::parse_text(
      "xi = 1.0\nrho = 1.0\ntau = 2.0\nc = 1\nT = 0.5\nN = 4\n");
  CHECK(cfg.hash() == cfg2.hash());
  const io::Config cfg3 = io::Config::parse_text(
      "xi = 1.5\nrho = 1.0\ntau = 2.0\nc = 1\nT = 0.5\nN = 4\n");
  CHECK(cfg.hash() != cfg3.hash());

  CHECK_THROWS(io::Config::parse_text("xi 1.0\n"));
  CHECK_THROWS(demo_config().number("absent"));
}

TEST_CASE("spectrum serialization carries the documented schema") {
  const io::Config cfg = demo_config();
  const SpectrumTable t = build_spectrum(cfg.parameters(), 4);
  const auto j = nlohmann::json::parse(io::spectrum_json(t, cfg));
  CHECK(j.contains("params"));
  CHECK(j["params"]["xi"] == 1.0);
  CHECK(j["N"] == 4);
  REQUIRE(j["pairs"].size() == 4);
  for (const char* key : {"k", "lambda1", "lambda2", "r_k", "psi1", "psi2", "phi1", "phi2"})
    CHECK(j["pairs"][0].contains(key));
  REQUIRE(j["Lambda"].size() == 8);
  for (const char* key : {"value", "k", "branch"}) CHECK(j["Lambda"][0].contains(key));
  for (const char* key : {"k0", "k1", "j_star", "delta", "q", "p", "alpha"})
    CHECK(j["diagnostics"].contains(key));
  CHECK(j["Lambda"][0]["value"] == doctest::Approx(t.merged[0].value));

  const std::string csv = io::spectrum_csv(t, cfg);
  CHECK(csv.find("# config_hash: " + cfg.hash()) == 0);
  CHECK(csv.find("k,lambda1,lambda2,r_k") != std::string::npos);
}

TEST_CASE("family serialization: decimal coefficients round-trip, csv rows") {
  const io::Config cfg = demo_config();
  const SpectrumTable t = build_spectrum(cfg.parameters(), 4);
  const BiorthFamily fam = build_biorth(control_dictionary(t, 0.5));
  const auto j = nlohmann::json::parse(io::biorth_json(fam, cfg));
  CHECK(j["precision_bits"] == fam.precision_bits);
  REQUIRE(j["coeffs"].size() == 8);
  // decimal strings preserve the extended precision
  const std::string s00 = j["coeffs"][0][0].get<std::string>();
  const mp::Real back = mp::from_string(s00, fam.coeffs.bits());
  mp::Real diff = back - fam.coeffs.at(0, 0);
  CHECK(std::abs(diff.to_double()) <=
        1e-40 * std::abs(fam.coeffs.at(0, 0).to_double()) + 1e-300);

  const std::string csv = io::biorth_csv(fam, cfg);
  CHECK(csv.find("k,Lambda_k,norm_q_k,max_row_residual") != std::string::npos);
  int rows = 0;
  for (char c : csv)
    if (c == '\n') ++rows;
  CHECK(rows == 8 + 3);  // header block + column row + 8 entries
}

TEST_CASE("control and simulation exports") {
  const io::Config cfg = demo_config();
  const SpectrumTable t = build_spectrum(cfg.parameters(), 4);
  const BiorthFamily fam = build_biorth(control_dictionary(t, 0.5));
  FourierState y0(4, Space::HMinus1);
  y0.coeff[0].t = 1.0;
  const ControlSignal v = synthesize_control(y0, t, fam, 0.5);

  const auto cj = nlohmann::json::parse(io::control_json(v, cfg));
  CHECK(cj["horizon"] == 0.5);
  CHECK(cj["l2_norm"].get<double>() == doctest::Approx(v.l2_norm()));
  CHECK(cj["decay"].size() == 8);
  CHECK(cj["weights"].size() == 8);

  const std::string ccsv = io::control_csv(v, cfg, 64);
  int rows = 0;
  for (char c : ccsv)
    if (c == '\n') ++rows;
  CHECK(rows == 65 + 3);

  const auto sim = forward_solve_exact(cfg.parameters(), y0, v, 4, 16, 0.0, 0.5);
  const std::string scsv = io::simulation_csv(sim, cfg);
  CHECK(scsv.find("t,theta_hm1,phi_hm1,theta_l2,phi_l2,theta_h01,phi_h01") != std::string::npos);
  const auto sj = nlohmann::json::parse(io::simulation_json(sim, cfg));
  CHECK(sj["states"].size() == 17);
  CHECK(sj["states"][0].size() == 4);
}

TEST_CASE("state loading: JSON coefficients and physical CSV samples") {
  const fs::path pj = temp_file("pfc_io_state.json",
                                "{\"coeffs\": [[1.0, -0.25], [0.0, 0.5]]}\n");
  const FourierState a = io::load_state(pj.string(), 4, Space::HMinus1);
  CHECK(a.coeff[0].t == 1.0);
  CHECK(a.coeff[0].p == -0.25);
  CHECK(a.coeff[1].p == 0.5);
  CHECK(a.coeff[2].t == 0.0);

  // physical samples of a known band-limited state round-trip through the
  // sine transform
  FourierState ref(3, Space::HMinus1);
  ref.coeff[0] = Vec2{0.8, -0.1};
  ref.coeff[2] = Vec2{-0.3, 0.45};
  const auto prof = physical_profile(ref, 64);
  std::string csv = "x,theta,phi\n";
  char buf[96];
  for (const auto& [x, v] : prof) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", x, v.t, v.p);
    csv += buf;
  }
  const fs::path pc = temp_file("pfc_io_state.csv", csv);
  const FourierState b = io::load_state(pc.string(), 3, Space::HMinus1);
  for (int k = 0; k < 3; ++k) {
    CHECK(b.coeff[static_cast<std::size_t>(k)].t ==
          doctest::Approx(ref.coeff[static_cast<std::size_t>(k)].t).epsilon(1e-12));
    CHECK(b.coeff[static_cast<std::size_t>(k)].p ==
          doctest::Approx(ref.coeff[static_cast<std::size_t>(k)].p).epsilon(1e-12));
  }
}

TEST_CASE("cost sweep export carries the fit columns") {
  const io::Config cfg = demo_config();
  CostSweep sweep;
  sweep.points = {{0.5, 10.0}, {1.0, 2.0}};
  sweep.fit = fit_cost_curve(sweep.points);
  const std::string csv = io::cost_csv(sweep, cfg);
  CHECK(csv.find("T,K_emp,C0_fit,M_fit") != std::string::npos);
  CHECK(csv.find("# fit: log K") != std::string::npos);
}

TEST_CASE("precision exhaustion propagates through the cost sweep") {
  Parameters prm{1.0, 1.0, 2.0, 1};
  CostOptions opt;
  opt.probe_modes = 2;
  opt.biorth.start_bits = 64;
  opt.biorth.bits_cap = 64;
  opt.biorth.tol = 1e-60;
  CHECK_THROWS_AS(control_cost(prm, {0.05}, 8, opt), PrecisionExhausted);
}
