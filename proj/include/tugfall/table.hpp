#pragma once

// Cohort feature table: one row per subject, a faller label, optional
// gender, and named numeric columns. Read from and written to CSV.

#include "tugfall/errors.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tugfall {

/// Nine significant digits, shortest form ("%.9g"); "nan"/"inf" spelled out.
std::string format_number(double value);

/// Parses a decimal number with '.' as the decimal point; throws IngestionError.
double parse_number(std::string_view text, std::string_view context = {});

/// Splits one CSV line on commas (no quoting) and trims surrounding blanks.
std::vector<std::string> split_csv_line(std::string_view line);

/// Non-blank, non-comment ('#') lines of a text file.
std::vector<std::string> read_data_lines(const std::filesystem::path& path);

struct CohortTable {
  std::vector<std::string> subject_ids;
  /// 1 = faller, 0 = non-faller.
  std::vector<int> faller;
  /// Empty when the table has no gender column.
  std::vector<std::string> gender;
  std::vector<std::string> columns;
  /// subjects x columns
  Eigen::MatrixXd values;

  Eigen::Index rows() const { return static_cast<Eigen::Index>(subject_ids.size()); }
  bool has_gender() const { return !gender.empty(); }
  bool has_column(std::string_view name) const;
  Eigen::Index column_index(std::string_view name) const;
  Eigen::VectorXd column(std::string_view name) const;
  void add_column(std::string name, const Eigen::VectorXd& data);

  /// (faller values, non-faller values) of one column.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> split(std::string_view name) const;

  long count(int label) const;
  /// Throws ValidationError unless both classes have at least two rows.
  void require_two_per_class() const;
};

struct TableSchema {
  std::string id_column = "subject_id";
  std::string label_column = "faller";
  std::string gender_column = "gender";
  /// Source column name -> internal column name, applied on read.
  std::map<std::string, std::string> column_mapping;
};

/// Label cells accept 0/1, true/false, yes/no, faller/non-faller (any case).
int parse_label(std::string_view text);

CohortTable read_cohort_table(const std::filesystem::path& path, const TableSchema& schema = {});

/// Header `subject_id,faller[,gender],<columns...>`. `comment` lines are
/// written first, each prefixed by "# ".
void write_cohort_table(const std::filesystem::path& path, const CohortTable& table,
                        const std::vector<std::string>& comment = {});

}  // namespace tugfall
