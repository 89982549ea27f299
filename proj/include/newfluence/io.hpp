#pragma once

#include "newfluence/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace newfluence {

enum class OutputFormat { csv, json };

inline constexpr std::string_view kTablesHeader =
    "n,p,lambda,df_ratio,tau_new_mean,tau_new_std,tau_if_mean,tau_if_std,"
    "tau_corrected_mean,tau_corrected_std";
inline constexpr std::string_view kRecordsHeader =
    "train_index,test_index,h_ii,i_true,i_if,i_if_corrected,i_new";

// 17 significant digits: enough for binary doubles to round-trip exactly.
inline std::string format_real(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

namespace detail {

// NaN marks a summary column that was not computed; serialized as an empty
// CSV field (and as null in JSON).
inline std::string csv_real(double v) { return std::isnan(v) ? std::string() : format_real(v); }

inline std::string csv_real(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string();
}

inline std::string json_real(double v) { return std::isnan(v) ? "null" : format_real(v); }

inline std::string json_real(const std::optional<double>& v) {
  return v ? format_real(*v) : "null";
}

// Writes through a sibling temporary file plus rename, so an interrupted or
// failed run never leaves a truncated file at the destination.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.empty()) throw std::runtime_error("output path must not be empty");
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignore;
      fs::remove(tmp, ignore);
      throw std::runtime_error("failed while writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw std::runtime_error("cannot move results into '" + path.string() + "': " + ec.message());
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// std::strtod rather than std::stod: stod raises out_of_range for subnormal
// magnitudes (ERANGE), which the writer can legitimately produce.
inline double parse_real(const std::string& field) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size())
    throw std::runtime_error("malformed numeric field '" + field + "'");
  return v;
}

}  // namespace detail

inline void write_tables(const std::filesystem::path& path, const std::vector<TableRow>& rows,
                         OutputFormat format) {
  std::ostringstream out;
  if (format == OutputFormat::csv) {
    out << kTablesHeader << '\n';
    for (const TableRow& r : rows) {
      out << r.n << ',' << r.p << ',' << format_real(r.lambda) << ','
          << detail::csv_real(r.df_ratio) << ',' << detail::csv_real(r.tau_new_mean) << ','
          << detail::csv_real(r.tau_new_std) << ',' << detail::csv_real(r.tau_if_mean) << ','
          << detail::csv_real(r.tau_if_std) << ',' << detail::csv_real(r.tau_corrected_mean)
          << ',' << detail::csv_real(r.tau_corrected_std) << '\n';
    }
  } else {
    out << "[\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const TableRow& r = rows[k];
      out << "  {\"n\": " << r.n << ", \"p\": " << r.p
          << ", \"lambda\": " << detail::json_real(r.lambda)
          << ", \"df_ratio\": " << detail::json_real(r.df_ratio)
          << ", \"tau_new_mean\": " << detail::json_real(r.tau_new_mean)
          << ", \"tau_new_std\": " << detail::json_real(r.tau_new_std)
          << ", \"tau_if_mean\": " << detail::json_real(r.tau_if_mean)
          << ", \"tau_if_std\": " << detail::json_real(r.tau_if_std)
          << ", \"tau_corrected_mean\": " << detail::json_real(r.tau_corrected_mean)
          << ", \"tau_corrected_std\": " << detail::json_real(r.tau_corrected_std) << '}'
          << (k + 1 < rows.size() ? ",\n" : "\n");
    }
    out << "]\n";
  }
  detail::write_atomic(path, out.str());
}

inline void write_records(const std::filesystem::path& path,
                          const std::vector<InfluenceRecord>& records, OutputFormat format) {
  std::ostringstream out;
  if (format == OutputFormat::csv) {
    out << kRecordsHeader << '\n';
    for (const InfluenceRecord& r : records) {
      out << r.train_index << ',' << r.test_index << ',' << format_real(r.h_ii) << ','
          << detail::csv_real(r.i_true) << ',' << format_real(r.i_if) << ','
          << format_real(r.i_if_corrected) << ',' << format_real(r.i_new) << '\n';
    }
  } else {
    out << "[\n";
    for (std::size_t k = 0; k < records.size(); ++k) {
      const InfluenceRecord& r = records[k];
      out << "  {\"train_index\": " << r.train_index << ", \"test_index\": " << r.test_index
          << ", \"h_ii\": " << detail::json_real(r.h_ii)
          << ", \"i_true\": " << detail::json_real(r.i_true)
          << ", \"i_if\": " << detail::json_real(r.i_if)
          << ", \"i_if_corrected\": " << detail::json_real(r.i_if_corrected)
          << ", \"i_new\": " << detail::json_real(r.i_new) << '}'
          << (k + 1 < records.size() ? ",\n" : "\n");
    }
    out << "]\n";
  }
  detail::write_atomic(path, out.str());
}

// Convenience entry point mirroring the CLI: either path may be empty to
// skip that output.
inline void write_results(const std::vector<TableRow>& rows,
                          const std::vector<InfluenceRecord>& records,
                          OutputFormat format,
                          const std::filesystem::path& tables_path,
                          const std::filesystem::path& records_path) {
  if (!tables_path.empty()) write_tables(tables_path, rows, format);
  if (!records_path.empty()) write_records(records_path, records, format);
}

inline std::vector<TableRow> read_tables_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != kTablesHeader)
    throw std::runtime_error("unexpected tables header in '" + path.string() + "'");
  std::vector<TableRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 10)
      throw std::runtime_error("malformed tables row in '" + path.string() + "'");
    TableRow r;
    r.n = static_cast<Index>(std::stoll(fields[0]));
    r.p = static_cast<Index>(std::stoll(fields[1]));
    r.lambda = detail::parse_real(fields[2]);
    r.df_ratio = detail::parse_real(fields[3]);
    r.tau_new_mean = detail::parse_real(fields[4]);
    r.tau_new_std = detail::parse_real(fields[5]);
    r.tau_if_mean = detail::parse_real(fields[6]);
    r.tau_if_std = detail::parse_real(fields[7]);
    r.tau_corrected_mean = detail::parse_real(fields[8]);
    r.tau_corrected_std = detail::parse_real(fields[9]);
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<InfluenceRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader)
    throw std::runtime_error("unexpected records header in '" + path.string() + "'");
  std::vector<InfluenceRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 7)
      throw std::runtime_error("malformed record row in '" + path.string() + "'");
    InfluenceRecord r;
    r.train_index = static_cast<Index>(std::stoll(fields[0]));
    r.test_index = static_cast<Index>(std::stoll(fields[1]));
    r.h_ii = detail::parse_real(fields[2]);
    if (!fields[3].empty()) r.i_true = detail::parse_real(fields[3]);
    r.i_if = detail::parse_real(fields[4]);
    r.i_if_corrected = detail::parse_real(fields[5]);
    r.i_new = detail::parse_real(fields[6]);
    records.push_back(r);
  }
  return records;
}

}  // namespace newfluence
