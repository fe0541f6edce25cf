#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fomc::csv {

// A parsed comma-separated file. Fields are unquoted; every row must have
// as many fields as the header.
struct Table {
  std::string source;  // file name used in diagnostics
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position of `name`, or throws ValidationError.
  std::size_t column(std::string_view name) const;
};

Table parse(std::string_view text, std::string source);
Table read(const std::filesystem::path& path);

// Numeric cell. Empty, "NA", "NaN" and "." read as quiet NaN (missing);
// anything else unparseable throws ValidationError naming row and column.
double to_double(const Table& t, std::size_t row, std::size_t col);

// Shortest round-trip-stable text for a value: fixed 12 significant digits,
// negative zero printed as 0.
std::string num(double v);

// Accumulates rows and writes them with '\n' line endings.
class Writer {
 public:
  explicit Writer(std::vector<std::string> header);

  Writer& row(std::vector<std::string> fields);
  // Appends constant-valued `_stage` and `_config_hash` columns to every row.
  Writer& provenance(const std::string& stage, const std::string& config_hash);
  std::size_t size() const { return rows_.size(); }
  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace fomc::csv
