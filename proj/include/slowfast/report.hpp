#pragma once

#include <string>
#include <utility>
#include <vector>

namespace slowfast {

// Tabular experiment output: a CSV body plus a flat key = value summary.
struct TableReport {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> summary;

  void add_summary(const std::string& key, const std::string& value);
  void add_summary(const std::string& key, double value);
  // Returns "" when the key is absent.
  std::string summary_value(const std::string& key) const;
};

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

// Writes to "<path>.tmp" and renames over path. Throws Io on failure.
void write_file_atomically(const std::string& path, const std::string& contents);

// '#'-prefixed comment block, one line per input line.
std::string comment_block(const std::string& text);

std::string to_csv(const TableReport& report, const std::string& provenance = {});
std::string to_summary(const TableReport& report, const std::string& provenance = {});

void write_report(const TableReport& report, const std::string& csv_path,
                  const std::string& summary_path, const std::string& provenance = {});

}  // namespace slowfast
