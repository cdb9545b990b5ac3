#include "twostage/io.hpp"

#include "twostage/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace twostage {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one record. Double-quoted fields may hold the delimiter; "" inside
// quotes is a literal quote.
std::vector<std::string> split_record(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"' && trim(field).empty()) {
      quoted = true;
      was_quoted = true;
      field.clear();
    } else if (c == delimiter) {
      fields.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw InvalidDataset("unterminated quoted field in line: " + line);
  fields.push_back(was_quoted ? field : trim(field));
  return fields;
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA"; }

std::optional<double> parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string sanitize(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return s;
}

}  // namespace

std::size_t RawTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(it - header.begin());
}

RawTable parse_table(std::istream& in, const TableOptions& options) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidDataset("input is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const char delimiter =
      options.delimiter != 0 ? options.delimiter : (line.find('\t') != std::string::npos ? '\t' : ',');

  RawTable table;
  table.header = split_record(line, delimiter);
  if (options.id_column) {
    if (table.header.size() < 2) throw InvalidDataset("id column requested but the header has one field");
    table.header.erase(table.header.begin());
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : table.header) {
    if (name.empty()) throw InvalidDataset("header contains an empty column name");
    if (!seen.insert(name).second) throw InvalidDataset("duplicate column name '" + name + "'");
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_record(line, delimiter);
    if (options.id_column) fields.erase(fields.begin());
    if (fields.size() != table.header.size()) {
      throw InvalidDataset("line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(table.header.size()));
    }
    std::vector<std::optional<std::string>> row;
    row.reserve(fields.size());
    for (auto& f : fields) {
      if (is_missing(f)) {
        row.emplace_back(std::nullopt);
      } else {
        row.emplace_back(std::move(f));
      }
    }
    table.cells.push_back(std::move(row));
  }
  return table;
}

RawTable read_table(const std::string& path, const TableOptions& options) {
  std::ifstream in(path);
  if (!in) throw ConfigError("input: cannot open '" + path + "'");
  return parse_table(in, options);
}

std::vector<std::string> PreprocessLog::lines() const {
  std::vector<std::string> out;
  out.push_back("rows read: " + std::to_string(rows_read));
  out.push_back("rows dropped (missing outcome): " + std::to_string(rows_missing_outcome));
  out.push_back("rows dropped (missing treatment): " + std::to_string(rows_missing_treatment));
  out.push_back("rows kept: " + std::to_string(rows_kept));
  out.push_back("treatment coding: '" + control_value + "' -> 0" +
                (treated_value.empty() ? std::string(", no second arm") : ", '" + treated_value + "' -> 1"));
  out.push_back("biomarker columns: " + std::to_string(biomarkers_in) + " in, " +
                std::to_string(retained.size()) + " retained, " + std::to_string(excluded.size()) +
                " excluded");
  for (const auto& e : excluded) {
    out.push_back("excluded " + e.name + ": " + std::to_string(e.missing) + " missing (" +
                  format_number(100.0 * e.fraction) + "%)");
  }
  for (const auto& c : imputed) {
    out.push_back("imputed " + c.name + ": " + std::to_string(c.missing) + " cells with mean " +
                  format_number(c.mean));
  }
  return out;
}

Ingested ingest(const RawTable& table, const std::string& outcome, const std::string& treatment,
                Family family) {
  const std::size_t y_col = table.column(outcome);
  const std::size_t t_col = table.column(treatment);
  if (y_col == static_cast<std::size_t>(-1)) throw ConfigError("outcome: no column named '" + outcome + "'");
  if (t_col == static_cast<std::size_t>(-1)) {
    throw ConfigError("treatment: no column named '" + treatment + "'");
  }
  if (y_col == t_col) throw ConfigError("treatment: same column as outcome");

  PreprocessLog log;
  log.rows_read = table.n_rows();
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    if (!table.cells[r][y_col]) {
      ++log.rows_missing_outcome;
    } else if (!table.cells[r][t_col]) {
      ++log.rows_missing_treatment;
    } else {
      rows.push_back(r);
    }
  }
  log.rows_kept = rows.size();
  if (rows.empty()) throw EmptyAfterFiltering("no rows left after dropping missing outcome or treatment");

  std::set<std::string> levels;
  for (std::size_t r : rows) levels.insert(*table.cells[r][t_col]);
  if (levels.size() > 2) {
    throw NonBinaryTreatment("treatment column '" + treatment + "' has " + std::to_string(levels.size()) +
                             " distinct values");
  }
  log.control_value = *levels.begin();
  log.treated_value = levels.size() == 2 ? *levels.rbegin() : std::string();

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(n), t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t r = rows[static_cast<std::size_t>(i)];
    const std::string& cell = *table.cells[r][y_col];
    const auto v = parse_double(cell);
    if (!v) throw NonNumericCell(r + 1, y_col + 1, outcome, cell);
    y(i) = *v;
    t(i) = *table.cells[r][t_col] == log.control_value ? 0.0 : 1.0;
  }

  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    if (c == y_col || c == t_col) continue;
    ++log.biomarkers_in;
    std::size_t missing = 0;
    for (std::size_t r : rows) missing += table.cells[r][c] ? 0 : 1;
    // Strictly more than 10%, in integer arithmetic.
    if (missing * 10 > rows.size()) {
      log.excluded.push_back(
          {table.header[c], missing, static_cast<double>(missing) / static_cast<double>(rows.size())});
    } else {
      keep.push_back(c);
      log.retained.push_back(table.header[c]);
    }
  }
  if (keep.empty()) throw EmptyAfterFiltering("no biomarker columns left after exclusion");

  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t c = keep[k];
    const auto col = static_cast<Eigen::Index>(k);
    double sum = 0.0;
    std::size_t observed = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t r = rows[static_cast<std::size_t>(i)];
      if (!table.cells[r][c]) {
        x(i, col) = kNaN;
        continue;
      }
      const auto v = parse_double(*table.cells[r][c]);
      if (!v) throw NonNumericCell(r + 1, c + 1, table.header[c], *table.cells[r][c]);
      x(i, col) = *v;
      sum += *v;
      ++observed;
    }
    if (observed == rows.size()) continue;
    if (observed == 0) throw EmptyAfterFiltering("column '" + table.header[c] + "' has no observed values");
    const double mean = sum / static_cast<double>(observed);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isnan(x(i, col))) x(i, col) = mean;
    }
    log.imputed.push_back({table.header[c], rows.size() - observed, mean});
  }

  return Ingested{TrialDataset(std::move(y), std::move(t), std::move(x), log.retained, family),
                  std::move(log)};
}

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

void write_report(std::ostream& out, const StageTwoReport& report) {
  out << "index\tname\tstatus\testimate\tstd_error\tstatistic\tp_value\tthreshold\trejected\tnote\n";
  for (const auto& row : report.rows) {
    out << row.index + 1 << '\t' << sanitize(row.name) << '\t' << to_string(row.status) << '\t';
    if (row.wald) {
      out << format_number(row.wald->estimate) << '\t' << format_number(row.wald->std_error) << '\t'
          << format_number(row.wald->statistic) << '\t';
    } else {
      out << "NA\tNA\tNA\t";
    }
    out << format_number(row.p_value) << '\t' << format_number(row.threshold) << '\t'
        << (row.rejected ? "true" : "false") << '\t' << sanitize(row.note) << '\n';
  }
}

StageTwoReport parse_report(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("index\tname\tstatus", 0) != 0) {
    throw InvalidDataset("not a stage-2 report: missing header");
  }
  auto number = [](const std::string& s) {
    if (s == "NA") return kNaN;
    if (s == "Inf") return std::numeric_limits<double>::infinity();
    if (s == "-Inf") return -std::numeric_limits<double>::infinity();
    const auto v = parse_double(s);
    if (!v) throw InvalidDataset("report: bad number '" + s + "'");
    return *v;
  };
  StageTwoReport report;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) f.push_back(field);
    if (f.size() == 9) f.emplace_back();
    if (f.size() != 10) throw InvalidDataset("report: expected 10 fields in line: " + line);
    ReportRow row;
    const auto index = parse_double(f[0]);
    if (!index || *index < 1) throw InvalidDataset("report: bad index '" + f[0] + "'");
    row.index = static_cast<std::size_t>(*index) - 1;
    row.name = f[1];
    row.status = parse_row_status(f[2]);
    if (f[3] != "NA" || f[4] != "NA" || f[5] != "NA") {
      row.wald = WaldResult{number(f[3]), number(f[4]), number(f[5]), number(f[6])};
    }
    row.p_value = number(f[6]);
    row.threshold = number(f[7]);
    if (f[8] != "true" && f[8] != "false") throw InvalidDataset("report: bad rejected flag '" + f[8] + "'");
    row.rejected = f[8] == "true";
    row.note = f[9];
    report.rows.push_back(std::move(row));
  }
  return report;
}

StageTwoReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("report: cannot open '" + path + "'");
  return parse_report(in);
}

}  // namespace twostage
