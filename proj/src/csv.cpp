#include "fomc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "fomc/error.hpp"

namespace fomc::csv {

namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ValidationError(fmt::format("{}: missing column '{}'", source, name));
}

Table parse(std::string_view text, std::string source) {
  Table t;
  t.source = std::move(source);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ValidationError(fmt::format("{}:{}: expected {} fields, found {}", t.source, line_no,
                                        t.header.size(), fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw ValidationError(fmt::format("{}: empty file", t.source));
  return t;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.filename().string());
}

double to_double(const Table& t, std::size_t row, std::size_t col) {
  const std::string& cell = t.rows.at(row).at(col);
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    // +2: header line plus 1-based numbering
    throw ValidationError(fmt::format("{}: row {} column '{}': not a number: '{}'", t.source,
                                      row + 2, t.header.at(col), cell));
  }
  return value;
}

std::string num(double v) {
  if (v == 0.0) return "0";
  if (std::isnan(v)) return "NaN";
  return fmt::format("{:.12g}", v);
}

Writer::Writer(std::vector<std::string> header) : header_(std::move(header)) {}

Writer& Writer::row(std::vector<std::string> fields) {
  if (fields.size() != header_.size()) {
    throw Error(fmt::format("csv row has {} fields, header has {}", fields.size(), header_.size()));
  }
  for (const auto& f : fields) {
    if (f.find_first_of(",\r\n") != std::string::npos) {
      throw Error(fmt::format("csv field '{}' contains a separator", f));
    }
  }
  rows_.push_back(std::move(fields));
  return *this;
}

Writer& Writer::provenance(const std::string& stage, const std::string& config_hash) {
  header_.push_back("_stage");
  header_.push_back("_config_hash");
  for (auto& r : rows_) {
    r.push_back(stage);
    r.push_back(config_hash);
  }
  return *this;
}

std::string Writer::str() const {
  std::string out = fmt::format("{}\n", fmt::join(header_, ","));
  for (const auto& r : rows_) out += fmt::format("{}\n", fmt::join(r, ","));
  return out;
}

void Writer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << str();
}

}  // namespace fomc::csv
