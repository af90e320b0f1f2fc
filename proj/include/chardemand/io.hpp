#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chardemand/charnorm.hpp"

namespace chardemand {

inline constexpr const char* kVersion = "0.1.0";

/// Reads `date,firm_id,ret,<characteristics...>` CSV. Lines starting with '#'
/// are comments; `NA` or an empty field is missing. When `expected_chars` is
/// given the characteristic columns must match it exactly, in order.
RawPanel read_panel_csv(const std::string& path,
                        const std::optional<std::vector<std::string>>& expected_chars = {});

/// Quotes a text field when it contains a comma, quote or newline.
std::string csv_field(const std::string& text);

/// %.17g, or NA for NaN.
std::string format_number(double x);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

/// Writes a table preceded by `# chardemand <version> command=<c> seed=<s>`.
void write_csv(const std::string& path, const std::string& command, std::uint64_t seed,
               const CsvTable& table);

/// The panel in the ingestion schema: one row per (date, firm) with either a
/// return or a full set of scores.
CsvTable panel_table(const CharacteristicsPanel& chars, const Eigen::MatrixXd& returns);

std::string read_text_file(const std::string& path);

}  // namespace chardemand
