// config.hpp
// Run configuration: simulation defaults, the `key = value` config-file
// parser, and validation. Unknown keys are hard errors so a typo in a
// physics parameter cannot silently fall back to a default.

#pragma once

#include <homsim/apparatus.hpp>

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace homsim {

inline constexpr const char* kToolVersion = "homsim 1.0.0";

enum class OutputFormat { Csv, Json };

inline const char* format_name(OutputFormat f) {
  return f == OutputFormat::Csv ? "csv" : "json";
}

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw std::runtime_error("config: format must be 'csv' or 'json', got '" + s +
                           "'");
}

struct RunConfig {
  std::uint64_t seed = 1;
  int periods = 100;
  double period_s = 1.0;
  double transmittance = 0.5;
  double mode_overlap = 0.992;
  double arm_phase_deg = 39.4;
  double eta1 = 0.51;
  double eta2 = 0.51;
  double pair_rate_hz = 25400.0;
  double dark_coinc_hz = 0.0;
  double dip_width_um = 60.0;
  double shoulder_delay_um = 200.0;
  std::string output_dir = "out";
  OutputFormat format = OutputFormat::Csv;

  ApparatusParams apparatus() const {
    ApparatusParams p;
    p.transmittance = transmittance;
    p.mode_overlap = mode_overlap;
    p.arm_phase_deg = arm_phase_deg;
    p.eta1 = eta1;
    p.eta2 = eta2;
    p.pair_rate_hz = pair_rate_hz;
    p.dark_coinc_hz = dark_coinc_hz;
    p.dip_width_um = dip_width_um;
    p.shoulder_delay_um = shoulder_delay_um;
    return p;
  }

  void validate() const {
    apparatus().validate();
    if (periods < 1 || periods > 1000000)
      throw std::domain_error("config: periods outside [1, 1000000]");
    if (!(period_s > 0.0) || !is_finite(period_s))
      throw std::domain_error("config: period_s must be positive");
    if (output_dir.empty())
      throw std::domain_error("config: empty output_dir");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_real(const std::string& value, int line_no) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size())
    throw std::runtime_error("config: line " + std::to_string(line_no) +
                             ": expected a number, got '" + value + "'");
  return out;
}

inline std::uint64_t parse_unsigned(const std::string& value, int line_no) {
  if (!value.empty() && value[0] == '-')
    throw std::runtime_error("config: line " + std::to_string(line_no) +
                             ": expected a non-negative integer, got '" + value +
                             "'");
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size())
    throw std::runtime_error("config: line " + std::to_string(line_no) +
                             ": expected a non-negative integer, got '" + value +
                             "'");
  return out;
}

}  // namespace detail

/// Parse `key = value` lines on top of the given base config. `#` starts a
/// comment, blank lines are skipped, unknown keys throw with the line number.
/// The result is validated before it is returned.
inline RunConfig parse_config(std::istream& in, RunConfig base = RunConfig{}) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(line_no) +
                               ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::runtime_error("config: line " + std::to_string(line_no) +
                               ": expected 'key = value'");

    if (key == "seed") {
      base.seed = detail::parse_unsigned(value, line_no);
    } else if (key == "periods") {
      const std::uint64_t n = detail::parse_unsigned(value, line_no);
      if (n > 1000000)
        throw std::runtime_error("config: line " + std::to_string(line_no) +
                                 ": periods outside [1, 1000000]");
      base.periods = static_cast<int>(n);
    } else if (key == "period_s") {
      base.period_s = detail::parse_real(value, line_no);
    } else if (key == "transmittance") {
      base.transmittance = detail::parse_real(value, line_no);
    } else if (key == "mode_overlap") {
      base.mode_overlap = detail::parse_real(value, line_no);
    } else if (key == "arm_phase_deg") {
      base.arm_phase_deg = detail::parse_real(value, line_no);
    } else if (key == "eta1") {
      base.eta1 = detail::parse_real(value, line_no);
    } else if (key == "eta2") {
      base.eta2 = detail::parse_real(value, line_no);
    } else if (key == "pair_rate_hz") {
      base.pair_rate_hz = detail::parse_real(value, line_no);
    } else if (key == "dark_coinc_hz") {
      base.dark_coinc_hz = detail::parse_real(value, line_no);
    } else if (key == "dip_width_um") {
      base.dip_width_um = detail::parse_real(value, line_no);
    } else if (key == "shoulder_delay_um") {
      base.shoulder_delay_um = detail::parse_real(value, line_no);
    } else if (key == "output_dir") {
      base.output_dir = value;
    } else if (key == "format") {
      base.format = parse_format(value);
    } else {
      throw std::runtime_error("config: line " + std::to_string(line_no) +
                               ": unknown key '" + key + "'");
    }
  }
  base.validate();
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("config: cannot open '" + path.string() + "'");
  try {
    return parse_config(in);
  } catch (const std::runtime_error& err) {
    throw std::runtime_error(path.string() + ": " + err.what());
  } catch (const std::domain_error& err) {
    throw std::runtime_error(path.string() + ": " + err.what());
  }
}

}  // namespace homsim
