// csvio.hpp
// Byte-stable artifact serialization. All files are UTF-8 with LF line
// endings; doubles are printed with std::to_chars (shortest round-trip
// form), so equal values always produce equal bytes.
//
// Counts CSV schema: header `period_index,delay_um,duration_s,coincidences`,
// one record per row, dip rows before shoulder rows. On ingest a record is
// classified as dip when |delay_um| < 1e-9 and as shoulder otherwise.

#pragma once

#include <homsim/config.hpp>
#include <homsim/mcsim.hpp>

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace homsim {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc())
    throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline std::string format_int(std::int64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void write_file(const std::filesystem::path& path,
                       const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::int64_t parse_count_int(const std::string& field, int line_no,
                                    const char* column) {
  std::int64_t out = 0;
  const auto res =
      std::from_chars(field.data(), field.data() + field.size(), out);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw std::runtime_error("counts: line " + std::to_string(line_no) +
                             ", column " + column + ": expected an integer, got '" +
                             field + "'");
  return out;
}

inline double parse_count_real(const std::string& field, int line_no,
                               const char* column) {
  double out = 0.0;
  const auto res =
      std::from_chars(field.data(), field.data() + field.size(), out);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw std::runtime_error("counts: line " + std::to_string(line_no) +
                             ", column " + column + ": expected a number, got '" +
                             field + "'");
  return out;
}

}  // namespace detail

inline constexpr const char* kCountsHeader =
    "period_index,delay_um,duration_s,coincidences";

inline std::string render_counts_csv(const CountSeries& series) {
  std::string out(kCountsHeader);
  out.push_back('\n');
  auto emit = [&out](const CountRecord& r) {
    out += format_int(r.period_index);
    out.push_back(',');
    out += format_double(r.delay_um);
    out.push_back(',');
    out += format_double(r.duration_s);
    out.push_back(',');
    out += format_int(r.coincidences);
    out.push_back('\n');
  };
  for (const CountRecord& r : series.dip) emit(r);
  for (const CountRecord& r : series.shoulder) emit(r);
  return out;
}

inline void write_counts_csv(const CountSeries& series,
                             const std::filesystem::path& path) {
  detail::write_file(path, render_counts_csv(series));
}

/// Parse a counts CSV back into a CountSeries. Malformed input is rejected
/// with the offending line (1-based, header is line 1) and column.
inline CountSeries ingest_counts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("counts: cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line) || line != kCountsHeader)
    throw std::runtime_error("counts: line 1: expected header '" +
                             std::string(kCountsHeader) + "'");

  CountSeries series;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 4)
      throw std::runtime_error("counts: line " + std::to_string(line_no) +
                               ": expected 4 columns, got " +
                               std::to_string(fields.size()));
    CountRecord r;
    r.period_index = detail::parse_count_int(fields[0], line_no, "period_index");
    r.delay_um = detail::parse_count_real(fields[1], line_no, "delay_um");
    r.duration_s = detail::parse_count_real(fields[2], line_no, "duration_s");
    r.coincidences = detail::parse_count_int(fields[3], line_no, "coincidences");
    if (!(r.duration_s > 0.0))
      throw std::runtime_error("counts: line " + std::to_string(line_no) +
                               ", column duration_s: must be positive");
    if (r.coincidences < 0)
      throw std::runtime_error("counts: line " + std::to_string(line_no) +
                               ", column coincidences: negative count");
    if (std::abs(r.delay_um) < 1e-9)
      series.dip.push_back(r);
    else
      series.shoulder.push_back(r);
  }
  if (series.dip.empty()) throw std::runtime_error("counts: no dip records");
  if (series.shoulder.empty())
    throw std::runtime_error("counts: no shoulder records");
  return series;
}

// Scan tables: one row per scan point, fixed column order in CSV; the JSON
// rendering is an array of per-row objects (keys alphabetical).
using Cell = std::variant<double, std::int64_t>;

struct ScanTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline std::string render_csv(const ScanTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out.push_back(',');
    out += table.columns[c];
  }
  out.push_back('\n');
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw std::logic_error("ScanTable: row width does not match header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out.push_back(',');
      if (const auto* d = std::get_if<double>(&row[c]))
        out += format_double(*d);
      else
        out += format_int(std::get<std::int64_t>(row[c]));
    }
    out.push_back('\n');
  }
  return out;
}

inline std::string render_json(const ScanTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw std::logic_error("ScanTable: row width does not match header");
    nlohmann::json obj;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (const auto* d = std::get_if<double>(&row[c]))
        obj[table.columns[c]] = *d;
      else
        obj[table.columns[c]] = std::get<std::int64_t>(row[c]);
    }
    rows.push_back(std::move(obj));
  }
  return rows.dump(2) + "\n";
}

/// Write a scan table as `<stem>.csv` or `<stem>.json` under dir, returning
/// the file name actually written.
inline std::string write_table(const ScanTable& table,
                               const std::filesystem::path& dir,
                               const std::string& stem, OutputFormat format) {
  const std::string name =
      stem + (format == OutputFormat::Csv ? ".csv" : ".json");
  detail::write_file(dir / name, format == OutputFormat::Csv
                                     ? render_csv(table)
                                     : render_json(table));
  return name;
}

inline nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json j;
  j["arm_phase_deg"] = config.arm_phase_deg;
  j["dark_coinc_hz"] = config.dark_coinc_hz;
  j["dip_width_um"] = config.dip_width_um;
  j["eta1"] = config.eta1;
  j["eta2"] = config.eta2;
  j["format"] = format_name(config.format);
  j["mode_overlap"] = config.mode_overlap;
  j["output_dir"] = config.output_dir;
  j["pair_rate_hz"] = config.pair_rate_hz;
  j["period_s"] = config.period_s;
  j["periods"] = config.periods;
  j["seed"] = config.seed;
  j["shoulder_delay_um"] = config.shoulder_delay_um;
  j["transmittance"] = config.transmittance;
  return j;
}

/// Run manifest: everything needed to reproduce the artifacts byte for byte
/// (up to where they are placed on disk). Keys serialize alphabetically.
inline std::string render_manifest(const std::string& command,
                                   const RunConfig& config,
                                   const std::vector<std::string>& artifacts) {
  nlohmann::json j;
  j["artifact_files"] = artifacts;
  j["command"] = command;
  j["config_snapshot"] = config_to_json(config);
  j["seed"] = config.seed;
  j["tool_version"] = kToolVersion;
  return j.dump(2) + "\n";
}

inline void write_manifest(const std::string& command, const RunConfig& config,
                           const std::vector<std::string>& artifacts,
                           const std::filesystem::path& dir) {
  detail::write_file(dir / "manifest.json",
                     render_manifest(command, config, artifacts));
}

}  // namespace homsim
