#include "tugfall/table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace tugfall {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

double parse_number(std::string_view text, std::string_view context) {
  if (text == "nan" || text == "NaN") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw IngestionError("cannot parse number '" + std::string(text) + "'" +
                         (context.empty() ? "" : " in " + std::string(context)));
  }
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.front()))) cell.remove_prefix(1);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back()))) cell.remove_suffix(1);
    out.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> read_data_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

bool CohortTable::has_column(std::string_view name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

Eigen::Index CohortTable::column_index(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ValidationError("table has no column '" + std::string(name) + "'");
  return static_cast<Eigen::Index>(it - columns.begin());
}

Eigen::VectorXd CohortTable::column(std::string_view name) const { return values.col(column_index(name)); }

void CohortTable::add_column(std::string name, const Eigen::VectorXd& data) {
  if (data.size() != rows()) throw ValidationError("add_column: length does not match the table");
  if (has_column(name)) {
    values.col(column_index(name)) = data;
    return;
  }
  values.conservativeResize(rows(), values.cols() + 1);
  values.col(values.cols() - 1) = data;
  columns.push_back(std::move(name));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> CohortTable::split(std::string_view name) const {
  const Eigen::VectorXd col = column(name);
  Eigen::VectorXd pos(count(1)), neg(count(0));
  Eigen::Index ip = 0, in = 0;
  for (Eigen::Index i = 0; i < rows(); ++i) {
    if (faller[static_cast<std::size_t>(i)] == 1) pos[ip++] = col[i];
    else neg[in++] = col[i];
  }
  return {pos, neg};
}

long CohortTable::count(int label) const {
  return static_cast<long>(std::count(faller.begin(), faller.end(), label));
}

void CohortTable::require_two_per_class() const {
  if (count(1) < 2 || count(0) < 2) {
    throw ValidationError("cohort table needs at least two fallers and two non-fallers");
  }
}

int parse_label(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "1" || t == "1.0" || t == "true" || t == "yes" || t == "faller") return 1;
  if (t == "0" || t == "0.0" || t == "false" || t == "no" || t == "non-faller" || t == "nonfaller" ||
      t == "non_faller") {
    return 0;
  }
  throw IngestionError("unrecognized faller label '" + std::string(text) + "'");
}

CohortTable read_cohort_table(const std::filesystem::path& path, const TableSchema& schema) {
  const auto lines = read_data_lines(path);
  if (lines.empty()) throw IngestionError(path.string() + " is empty");

  std::vector<std::string> header = split_csv_line(lines.front());
  for (auto& name : header) {
    if (const auto it = schema.column_mapping.find(name); it != schema.column_mapping.end()) name = it->second;
  }
  std::set<std::string> seen;
  for (const auto& name : header) {
    if (!seen.insert(name).second) throw IngestionError(path.string() + ": duplicate column '" + name + "'");
  }

  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id_col = find(schema.id_column);
  const auto label_col = find(schema.label_column);
  const auto gender_col = find(schema.gender_column);
  if (!label_col) throw IngestionError(path.string() + ": missing label column '" + schema.label_column + "'");

  CohortTable table;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col || c == id_col || c == gender_col) continue;
    feature_cols.push_back(c);
    table.columns.push_back(header[c]);
  }

  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  table.values.resize(n, static_cast<Eigen::Index>(feature_cols.size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto cells = split_csv_line(lines[static_cast<std::size_t>(r + 1)]);
    const std::string where = path.string() + " row " + std::to_string(r + 1);
    if (cells.size() != header.size()) throw IngestionError(where + ": expected " + std::to_string(header.size()) + " cells");
    table.subject_ids.push_back(id_col ? cells[*id_col] : "row" + std::to_string(r + 1));
    table.faller.push_back(parse_label(cells[*label_col]));
    if (gender_col) table.gender.push_back(cells[*gender_col]);
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      table.values(r, static_cast<Eigen::Index>(k)) = parse_number(cells[feature_cols[k]], where);
    }
  }
  return table;
}

void write_cohort_table(const std::filesystem::path& path, const CohortTable& table,
                        const std::vector<std::string>& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  for (const auto& line : comment) out << "# " << line << '\n';
  out << "subject_id,faller";
  if (table.has_gender()) out << ",gender";
  for (const auto& c : table.columns) out << ',' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    out << table.subject_ids[i] << ',' << table.faller[i];
    if (table.has_gender()) out << ',' << table.gender[i];
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) out << ',' << format_number(table.values(r, c));
    out << '\n';
  }
}

}  // namespace tugfall
