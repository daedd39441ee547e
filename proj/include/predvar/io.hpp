#pragma once

// File formats shared by the command-line tools.
//
// CSV: header row, RFC 4180 quoting, '.' decimal, shortest round-trip
// decimal for doubles. JSON: matrices as {"rows", "cols", "data"} with
// row-major nested arrays; non-finite numbers are written as null.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "predvar/lorenz.hpp"
#include "predvar/metrics.hpp"

namespace predvar::io {

using Json = nlohmann::json;
namespace fs = std::filesystem;

/// Shortest decimal that parses back to the same double; "nan", "inf", "-inf"
/// for non-finite values.
std::string format_double(double x);
/// Throws FormatError unless the whole field is a number.
double parse_double(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws FormatError when absent.
  std::size_t column(std::string_view name) const;
};

/// Parse CSV text; `source` names the input in error messages, which carry
/// the line and column of the first problem.
CsvTable parse_csv(std::string_view text, const std::string& source = "<csv>");
std::string format_csv(const CsvTable& table);

CsvTable read_csv(const fs::path& path);
void write_csv(const fs::path& path, const CsvTable& table);

/// Numeric table with the given column names, one matrix row per CSV row.
CsvTable matrix_table(const Matrix& m, const std::vector<std::string>& header);
/// Every cell must parse as a number.
Matrix table_matrix(const CsvTable& table);

/// Column names prefix0, prefix1, ...
std::vector<std::string> numbered(std::string_view prefix, std::size_t count);

Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json number_to_json(double x);
double number_from_json(const Json& j);

/// {"columns": [...], "rows": [[...], ...]} with every cell a string.
Json table_to_json(const CsvTable& table);
CsvTable table_from_json(const Json& j);
/// Writes `stem`.csv or `stem`.json according to format ("csv" or "json").
void write_table(const fs::path& stem, const CsvTable& table, std::string_view format);
/// Reads whichever of `stem`.csv and `stem`.json exists.
CsvTable read_table(const fs::path& stem);

Json read_json(const fs::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const fs::path& path, const Json& j);

/// Writes text, creating missing parent directories. Throws IoError.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

// ---- datasets: y.csv, v_true.csv, truth.json ----------------------------------

Json params_to_json(const PredVarParams& params);
PredVarParams params_from_json(const Json& j);

void save_dataset(const fs::path& dir, const SyntheticDataset& dataset);
/// The static-noise stream is recovered as (y - v P^T) Rbar.
SyntheticDataset load_dataset(const fs::path& dir);

// ---- fitted models: model.json, diagnostics.json --------------------------------

Json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const Json& j);
Json diagnostics_json(const FitResult& fit);

// ---- evaluation and sweeps -----------------------------------------------------

Json report_to_json(const EvalReport& report);
EvalReport report_from_json(const Json& j);

/// Long format: figure, split, row, col, value. The em_sig_pred figure has an
/// empty split.
CsvTable covariance_table(const EvalReport& report);
/// Long format: sample, series, value.
CsvTable traces_table(const SensorTraces& traces);
CsvTable sweep_table(const std::vector<SweepRow>& rows);
std::vector<SweepRow> sweep_from_table(const CsvTable& table);

}  // namespace predvar::io
