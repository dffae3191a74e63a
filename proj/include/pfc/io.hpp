#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pfc/biortho.hpp"
#include "pfc/control.hpp"
#include "pfc/galerkin.hpp"
#include "pfc/spectral.hpp"
#include "pfc/types.hpp"

namespace pfc::io {

/// Flat key = value configuration ('#' comments, dotted keys allowed).
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long integer_or(const std::string& key, long fallback) const;
  std::string text_or(const std::string& key, const std::string& fallback) const;

  const std::string& raw() const { return raw_; }
  std::string hash() const;  // FNV-1a over the normalized text

  Parameters parameters() const;

 private:
  std::map<std::string, std::string> kv_;
  std::string raw_;
};

/// Header block stamped on every output file: config hash + library version.
std::string file_header(const Config& cfg, char comment = '#');

void write_text(const std::string& path, const std::string& content);

std::string spectrum_json(const SpectrumTable& t, const Config& cfg);
std::string spectrum_csv(const SpectrumTable& t, const Config& cfg);

std::string biorth_json(const BiorthFamily& f, const Config& cfg);
std::string biorth_csv(const BiorthFamily& f, const Config& cfg);

std::string control_csv(const ControlSignal& v, const Config& cfg, int points = 2048);
std::string control_json(const ControlSignal& v, const Config& cfg);
std::string piecewise_control_csv(const PiecewiseControl& v, const Config& cfg, int points = 2048);

std::string simulation_csv(const SimulationResult& sim, const Config& cfg);
std::string simulation_json(const SimulationResult& sim, const Config& cfg);
std::string profile_csv(const FourierState& state, int grid_points, const Config& cfg);

std::string cost_csv(const CostSweep& sweep, const Config& cfg);

/// Initial data: JSON {"coeffs": [[t,p],...]} or CSV of physical samples
/// (x, theta, phi) on the uniform interior grid, converted by sine transform.
FourierState load_state(const std::string& path, int modes, Space space);

}  // namespace pfc::io
