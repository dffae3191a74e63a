#include "pfc/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pfc/dst.hpp"

namespace pfc::io {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Config Config::parse_text(const std::string& text) {
  Config cfg;
  cfg.raw_ = text;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key = value on line " + std::to_string(lineno));
    const std::string key = strip(line.substr(0, eq));
    const std::string val = strip(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::runtime_error("config: empty key or value on line " + std::to_string(lineno));
    cfg.kv_[key] = val;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) { return parse_text(read_file(path)); }

double Config::number(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw std::runtime_error("config: missing key '" + key + "'");
  std::size_t pos = 0;
  const double v = std::stod(it->second, &pos);
  if (pos != it->second.size())
    throw std::runtime_error("config: key '" + key + "' is not a number");
  return v;
}

double Config::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long Config::integer_or(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  return static_cast<long>(number(key));
}

std::string Config::text_or(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string Config::hash() const {
  // FNV-1a over the canonical key=value lines
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& [k, v] : kv_) {
    for (const std::string* s : {&k, &v}) {
      for (char c : *s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
      }
      h ^= '\n';
      h *= 1099511628211ull;
    }
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Parameters Config::parameters() const {
  Parameters prm;
  prm.xi = number("xi");
  prm.rho = number("rho");
  prm.tau = number("tau");
  prm.c = static_cast<int>(integer_or("c", 1));
  prm.validate();
  return prm;
}

std::string file_header(const Config& cfg, char comment) {
  std::ostringstream out;
  out << comment << " config_hash: " << cfg.hash() << "\n";
  out << comment << " generator: pfc " << kVersion << "\n";
  return out.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

namespace {

ordered_json meta(const Config& cfg) {
  return ordered_json{{"config_hash", cfg.hash()}, {"generator", std::string("pfc ") + kVersion}};
}

ordered_json params_json(const Parameters& p) {
  return ordered_json{{"xi", p.xi}, {"rho", p.rho}, {"tau", p.tau}, {"c", p.c}};
}

}  // namespace

std::string spectrum_json(const SpectrumTable& t, const Config& cfg) {
  ordered_json j;
  j["meta"] = meta(cfg);
  j["params"] = params_json(t.params);
  j["N"] = t.N;
  auto pairs = ordered_json::array();
  for (const auto& ep : t.pairs) {
    pairs.push_back(ordered_json{{"k", ep.k},
                                 {"lambda1", ep.lambda1},
                                 {"lambda2", ep.lambda2},
                                 {"r_k", ep.r},
                                 {"psi1", {ep.psi1.t, ep.psi1.p}},
                                 {"psi2", {ep.psi2.t, ep.psi2.p}},
                                 {"phi1", {ep.phi1.t, ep.phi1.p}},
                                 {"phi2", {ep.phi2.t, ep.phi2.p}}});
  }
  j["pairs"] = std::move(pairs);
  auto lam = ordered_json::array();
  for (const auto& e : t.merged)
    lam.push_back(ordered_json{{"value", e.value}, {"k", e.k}, {"branch", e.branch}});
  j["Lambda"] = std::move(lam);
  j["diagnostics"] = ordered_json{{"k0", t.diag.k0},
                                  {"k0_bound", t.diag.k0_bound},
                                  {"k1", t.diag.k1},
                                  {"j_star", t.diag.j_star},
                                  {"delta", t.diag.delta_branch},
                                  {"delta_merged", t.diag.delta_merged},
                                  {"min_cross_gap", t.diag.min_cross_gap},
                                  {"q", t.diag.q},
                                  {"p", t.diag.p},
                                  {"alpha", t.diag.alpha},
                                  {"sum_inv_lambda", t.diag.sum_inv_lambda}};
  return j.dump(2) + "\n";
}

std::string spectrum_csv(const SpectrumTable& t, const Config& cfg) {
  std::ostringstream out;
  out << file_header(cfg);
  out << "k,lambda1,lambda2,r_k\n";
  for (const auto& ep : t.pairs)
    out << ep.k << ',' << fmt(ep.lambda1) << ',' << fmt(ep.lambda2) << ',' << fmt(ep.r) << "\n";
  return out.str();
}

std::string biorth_json(const BiorthFamily& f, const Config& cfg) {
  ordered_json j;
  j["meta"] = meta(cfg);
  j["horizon"] = f.dict.horizon;
  j["decay"] = f.dict.decay;
  j["precision_bits"] = f.precision_bits;
  j["certified_residual"] = f.certified_residual;
  const int digits = static_cast<int>(f.coeffs.bits() * 0.302) + 2;
  auto rows = ordered_json::array();
  for (std::size_t k = 0; k < f.dict.size(); ++k) {
    auto row = ordered_json::array();
    for (std::size_t c = 0; c < f.dict.size(); ++c) row.push_back(f.coeffs.at(k, c).str(digits));
    rows.push_back(std::move(row));
  }
  j["coeffs"] = std::move(rows);
  j["norms"] = f.norms;
  return j.dump(2) + "\n";
}

std::string biorth_csv(const BiorthFamily& f, const Config& cfg) {
  std::ostringstream out;
  out << file_header(cfg);
  out << "k,Lambda_k,norm_q_k,max_row_residual\n";
  for (std::size_t k = 0; k < f.dict.size(); ++k) {
    double rowmax = 0.0;
    for (std::size_t j = 0; j < f.dict.size(); ++j)
      rowmax = std::max(rowmax, std::abs(f.residual_at(k, j)));
    out << (k + 1) << ',' << fmt(f.dict.decay[k]) << ',' << fmt(f.norms[k]) << ','
        << fmt(rowmax) << "\n";
  }
  return out.str();
}

std::string control_csv(const ControlSignal& v, const Config& cfg, int points) {
  std::ostringstream out;
  out << file_header(cfg);
  out << "t,v\n";
  const auto vals = v.sample(0.0, v.horizon(), points);
  for (int i = 0; i <= points; ++i)
    out << fmt(v.horizon() * i / points) << ',' << fmt(vals[static_cast<std::size_t>(i)]) << "\n";
  return out.str();
}

std::string control_json(const ControlSignal& v, const Config& cfg) {
  ordered_json j;
  j["meta"] = meta(cfg);
  j["horizon"] = v.horizon();
  j["support"] = v.support();
  j["l2_norm"] = v.l2_norm();
  if (!v.is_zero()) {
    j["decay"] = v.atoms().decay;
    j["weights"] = v.atoms().weight_strings();
  }
  return j.dump(2) + "\n";
}

std::string piecewise_control_csv(const PiecewiseControl& v, const Config& cfg, int points) {
  std::ostringstream out;
  out << file_header(cfg);
  out << "t,v\n";
  const auto vals = v.sample(0.0, v.horizon, points);
  for (int i = 0; i <= points; ++i)
    out << fmt(v.horizon * i / points) << ',' << fmt(vals[static_cast<std::size_t>(i)]) << "\n";
  return out.str();
}

std::string simulation_csv(const SimulationResult& sim, const Config& cfg) {
  std::ostringstream out;
  out << file_header(cfg);
  const bool trace = !sim.boundary_trace.empty();
  out << "t,theta_hm1,phi_hm1,theta_l2,phi_l2,theta_h01,phi_h01";
  if (trace) out << ",boundary_trace";
  out << "\n";
  for (std::size_t i = 0; i < sim.grid.size(); ++i) {
    const NormRow& n = sim.norms[i];
    out << fmt(sim.grid[i]) << ',' << fmt(n.theta_hm1) << ',' << fmt(n.phi_hm1) << ','
        << fmt(n.theta_l2) << ',' << fmt(n.phi_l2) << ',' << fmt(n.theta_h01) << ','
        << fmt(n.phi_h01);
    if (trace) out << ',' << fmt(sim.boundary_trace[2 * i]);
    out << "\n";
  }
  return out.str();
}

std::string simulation_json(const SimulationResult& sim, const Config& cfg) {
  ordered_json j;
  j["meta"] = meta(cfg);
  j["t0"] = sim.t0;
  j["t1"] = sim.t1;
  j["grid"] = sim.grid;
  auto snaps = ordered_json::array();
  for (const auto& st : sim.states) {
    auto coeff = ordered_json::array();
    for (const auto& c : st.coeff) coeff.push_back(ordered_json::array({c.t, c.p}));
    snaps.push_back(std::move(coeff));
  }
  j["states"] = std::move(snaps);
  if (!sim.boundary_trace.empty()) j["boundary_trace"] = sim.boundary_trace;
  return j.dump() + "\n";
}

std::string profile_csv(const FourierState& state, int grid_points, const Config& cfg) {
  std::ostringstream out;
  out << file_header(cfg);
  out << "x,theta,phi\n";
  for (const auto& [x, v] : physical_profile(state, grid_points))
    out << fmt(x) << ',' << fmt(v.t) << ',' << fmt(v.p) << "\n";
  return out.str();
}

std::string cost_csv(const CostSweep& sweep, const Config& cfg) {
  std::ostringstream out;
  out << file_header(cfg);
  out << "# fit: log K = " << fmt(sweep.fit.log_c0) << " + " << fmt(sweep.fit.m)
      << " / T (R^2 = " << fmt(sweep.fit.r2) << ")\n";
  out << "T,K_emp,C0_fit,M_fit\n";
  for (const auto& p : sweep.points)
    out << fmt(p.T) << ',' << fmt(p.K) << ',' << fmt(std::exp(sweep.fit.log_c0)) << ','
        << fmt(sweep.fit.m) << "\n";
  return out.str();
}

FourierState load_state(const std::string& path, int modes, Space space) {
  const std::string text = read_file(path);
  FourierState st(modes, space);
  if (text.find('{') != std::string::npos && path.size() > 5 &&
      path.substr(path.size() - 5) == ".json") {
    const auto j = nlohmann::json::parse(text);
    const auto& arr = j.at("coeffs");
    for (std::size_t k = 0; k < arr.size() && k < st.coeff.size(); ++k) {
      st.coeff[k].t = arr[k][0].get<double>();
      st.coeff[k].p = arr[k][1].get<double>();
    }
    return st;
  }
  // CSV of physical samples: x,theta,phi on the interior of a uniform grid
  std::istringstream in(text);
  std::string line;
  std::vector<double> xs, th, ph;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
    std::istringstream row(line);
    std::string cell;
    double vals[3] = {0, 0, 0};
    int c = 0;
    while (std::getline(row, cell, ',') && c < 3) vals[c++] = std::stod(cell);
    if (c == 3) {
      xs.push_back(vals[0]);
      th.push_back(vals[1]);
      ph.push_back(vals[2]);
    }
  }
  if (xs.empty()) throw std::runtime_error("load_state: no samples in " + path);
  const int g = static_cast<int>(xs.size()) + 1;
  SineGrid grid(g);
  std::vector<double> ct, cp;
  grid.analyze(th, modes, ct);
  grid.analyze(ph, modes, cp);
  for (int k = 0; k < modes; ++k)
    st.coeff[static_cast<std::size_t>(k)] = Vec2{ct[static_cast<std::size_t>(k)], cp[static_cast<std::size_t>(k)]};
  return st;
}

}  // namespace pfc::io
