#pragma once

#include "twostage/model_core.hpp"
#include "twostage/two_stage.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace twostage {

// Header plus a rectangular grid of cells; nullopt marks a missing cell
// (empty or the literal NA).
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<std::string>>> cells;

  std::size_t n_rows() const { return cells.size(); }
  std::size_t n_cols() const { return header.size(); }
  // npos when absent.
  std::size_t column(const std::string& name) const;
};

struct TableOptions {
  // 0 picks tab when the header line contains one, comma otherwise.
  char delimiter = 0;
  // Drop the first column (a row identifier) on read.
  bool id_column = false;
};

// Throws InvalidDataset for ragged rows, duplicate or empty header names.
RawTable parse_table(std::istream& in, const TableOptions& options = {});
RawTable read_table(const std::string& path, const TableOptions& options = {});

struct ExcludedColumn {
  std::string name;
  std::size_t missing = 0;
  double fraction = 0.0;
};

struct ImputedColumn {
  std::string name;
  std::size_t missing = 0;
  double mean = 0.0;
};

struct PreprocessLog {
  std::size_t rows_read = 0;
  std::size_t rows_missing_outcome = 0;
  std::size_t rows_missing_treatment = 0;
  std::size_t rows_kept = 0;
  std::size_t biomarkers_in = 0;
  std::vector<std::string> retained;
  std::vector<ExcludedColumn> excluded;
  std::vector<ImputedColumn> imputed;
  std::string control_value;
  std::string treated_value;

  std::vector<std::string> lines() const;
};

struct Ingested {
  TrialDataset data;
  PreprocessLog log;
};

// Rows missing the outcome or treatment are dropped; biomarker columns with
// more than 10% missing (after the drop) are excluded; remaining gaps get the
// column mean. The treatment's two values map to 0/1 in lexicographic order.
Ingested ingest(const RawTable& table, const std::string& outcome, const std::string& treatment,
                Family family = Family::linear);

// %.6g, with NA for NaN and Inf/-Inf for infinities.
std::string format_number(double value);

void write_report(std::ostream& out, const StageTwoReport& report);
StageTwoReport parse_report(std::istream& in);
StageTwoReport read_report(const std::string& path);

}  // namespace twostage
