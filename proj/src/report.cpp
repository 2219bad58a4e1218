#include "slowfast/report.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slowfast/error.hpp"

namespace slowfast {

void TableReport::add_summary(const std::string& key, const std::string& value) {
  summary.emplace_back(key, value);
}

void TableReport::add_summary(const std::string& key, double value) {
  summary.emplace_back(key, format_double(value));
}

std::string TableReport::summary_value(const std::string& key) const {
  for (const auto& [k, v] : summary)
    if (k == key) return v;
  return {};
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

void write_file_atomically(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) fail(ErrorCode::Io, "cannot create directory " + target.parent_path().string());
  }
  const std::string temporary = path + ".tmp";
  {
    std::ofstream out(temporary, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open " + temporary + " for writing");
    out << contents;
    out.flush();
    if (!out) fail(ErrorCode::Io, "write to " + temporary + " failed");
  }
  std::error_code ec;
  fs::rename(temporary, target, ec);
  if (ec) fail(ErrorCode::Io, "cannot rename " + temporary + " to " + path);
}

std::string comment_block(const std::string& text) {
  if (text.empty()) return {};
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) out << "# " << line << '\n';
  return out.str();
}

std::string to_csv(const TableReport& report, const std::string& provenance) {
  std::ostringstream out;
  out << comment_block(provenance);
  for (std::size_t c = 0; c < report.columns.size(); ++c)
    out << (c ? "," : "") << report.columns[c];
  out << '\n';
  for (const auto& row : report.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
  return out.str();
}

std::string to_summary(const TableReport& report, const std::string& provenance) {
  std::ostringstream out;
  out << comment_block(provenance);
  out << "report = " << report.name << '\n';
  for (const auto& [key, value] : report.summary) out << key << " = " << value << '\n';
  return out.str();
}

void write_report(const TableReport& report, const std::string& csv_path,
                  const std::string& summary_path, const std::string& provenance) {
  if (!csv_path.empty()) write_file_atomically(csv_path, to_csv(report, provenance));
  if (!summary_path.empty()) write_file_atomically(summary_path, to_summary(report, provenance));
}

}  // namespace slowfast
