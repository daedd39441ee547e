#include "predvar/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace predvar::io {

namespace {

[[noreturn]] void format_error(const std::string& what) { throw Error(ErrorKind::FormatError, what); }

bool needs_quotes(std::string_view field) {
  return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_field(std::string& out, std::string_view field) {
  if (!needs_quotes(field)) {
    out.append(field);
    return;
  }
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

std::string location(const std::string& source, std::size_t line, std::size_t col) {
  return source + ":" + std::to_string(line) + ":" + std::to_string(col);
}

const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) format_error(std::string("missing JSON field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return member(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    format_error(std::string("field '") + key + "': " + e.what());
  }
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_to_json(v(i)));
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) format_error("expected a JSON array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from_json(j[i]);
  return v;
}

Json trace_to_json(const std::vector<double>& trace) {
  Json out = Json::array();
  for (double x : trace) out.push_back(number_to_json(x));
  return out;
}

std::vector<double> trace_from_json(const Json& j) {
  if (!j.is_array()) format_error("expected a JSON array of numbers");
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number_from_json(x));
  return out;
}

Json range_to_json(const IndexRange& r) { return {{"first", r.first}, {"count", r.count}}; }

IndexRange range_from_json(const Json& j) { return {get<std::size_t>(j, "first"), get<std::size_t>(j, "count")}; }

Json covariances_to_json(const ResidualCovariances& c) {
  return {{"meas_recon_cov", to_json(c.meas_recon)},
          {"meas_pred_cov", to_json(c.meas_pred)},
          {"sig_recon_cov", to_json(c.sig_recon)},
          {"sig_pred_cov", to_json(c.sig_pred)}};
}

ResidualCovariances covariances_from_json(const Json& j) {
  return {matrix_from_json(member(j, "meas_recon_cov")), matrix_from_json(member(j, "meas_pred_cov")),
          matrix_from_json(member(j, "sig_recon_cov")), matrix_from_json(member(j, "sig_pred_cov"))};
}

void append_long(CsvTable& t, const std::string& figure, const std::string& split, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      t.rows.push_back({figure, split, std::to_string(r), std::to_string(c), format_double(m(r, c))});
}

std::size_t parse_index(std::string_view text) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    format_error("'" + std::string(text) + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    format_error("'" + std::string(text) + "' is not a number");
  }
  return v;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  format_error("CSV has no column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> record_lines;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t col = 1;
  std::size_t quote_line = 0;
  std::size_t quote_col = 0;
  std::size_t record_line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record_lines.push_back(record_line);
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
          ++col;
        } else {
          quoted = false;
          if (i + 1 < text.size() && text[i + 1] != ',' && text[i + 1] != '\n' && text[i + 1] != '\r') {
            format_error(location(source, line, col + 1) + ": text after closing quote");
          }
        }
      } else {
        field.push_back(c);
        if (c == '\n') {
          ++line;
          col = 0;
        }
      }
    } else if (c == '"') {
      if (field_started) format_error(location(source, line, col) + ": quote inside unquoted field");
      quoted = true;
      field_started = true;
      quote_line = line;
      quote_col = col;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
      ++line;
      col = 0;
      record_line = line;
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++col;
  }
  if (quoted) format_error(location(source, quote_line, quote_col) + ": unterminated quoted field");
  if (field_started || !record.empty()) end_record();

  if (records.empty()) format_error(source + ": empty CSV");
  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() == 1 && records[r][0].empty()) continue;  // blank line
    if (records[r].size() != table.header.size()) {
      format_error(location(source, record_lines[r], 1) + ": expected " + std::to_string(table.header.size()) + " fields, found " +
                   std::to_string(records[r].size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

std::string format_csv(const CsvTable& table) {
  std::string out;
  auto put = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out.push_back(',');
      append_field(out, fields[i]);
    }
    out.push_back('\n');
  };
  put(table.header);
  for (const auto& row : table.rows) put(row);
  return out;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

void write_csv(const fs::path& path, const CsvTable& table) { write_text(path, format_csv(table)); }

CsvTable matrix_table(const Matrix& m, const std::vector<std::string>& header) {
  if (header.size() != static_cast<std::size_t>(m.cols())) {
    throw Error(ErrorKind::DimensionError, "header width does not match the matrix");
  }
  CsvTable t;
  t.header = header;
  t.rows.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<std::string> row;
    row.reserve(header.size());
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(format_double(m(r, c)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Matrix table_matrix(const CsvTable& table) {
  Matrix m(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      try {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_double(table.rows[r][c]);
      } catch (const Error& e) {
        format_error("line " + std::to_string(r + 2) + ", column " + std::to_string(c + 1) + ": " + e.what());
      }
    }
  }
  return m;
}

std::vector<std::string> numbered(std::string_view prefix, std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(std::string(prefix) + std::to_string(i));
  return out;
}

Json number_to_json(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double number_from_json(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) format_error("expected a number, found " + j.dump());
  return j.get<double>();
}

Json to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number_to_json(m(r, c)));
    data.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = get<Eigen::Index>(j, "rows");
  const auto cols = get<Eigen::Index>(j, "cols");
  const Json& data = member(j, "data");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != rows) {
    format_error("matrix data does not have the declared row count");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = data[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      format_error("matrix row " + std::to_string(r) + " does not have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = number_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

Json table_to_json(const CsvTable& table) {
  Json rows = Json::array();
  for (const auto& r : table.rows) rows.push_back(r);
  return {{"columns", table.header}, {"rows", std::move(rows)}};
}

CsvTable table_from_json(const Json& j) {
  CsvTable t;
  t.header = get<std::vector<std::string>>(j, "columns");
  t.rows = get<std::vector<std::vector<std::string>>>(j, "rows");
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size()) format_error("table row width differs from the column count");
  }
  return t;
}

void write_table(const fs::path& stem, const CsvTable& table, std::string_view format) {
  fs::path path = stem;
  if (format == "json") {
    write_json(path.replace_extension(".json"), table_to_json(table));
  } else if (format == "csv") {
    write_csv(path.replace_extension(".csv"), table);
  } else {
    throw Error(ErrorKind::ConfigError, "unknown output format '" + std::string(format) + "'");
  }
}

CsvTable read_table(const fs::path& stem) {
  fs::path csv = stem;
  csv.replace_extension(".csv");
  if (fs::exists(csv)) return read_csv(csv);
  fs::path json = stem;
  json.replace_extension(".json");
  return table_from_json(read_json(json));
}

Json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    format_error(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json params_to_json(const PredVarParams& params) {
  Json coeffs = Json::array();
  for (const auto& b : params.var_coeffs) coeffs.push_back(to_json(b));
  return {{"loadings", to_json(params.loadings)},
          {"static_loadings", to_json(params.static_loadings)},
          {"var_coeffs", std::move(coeffs)},
          {"innovation_cov", to_json(params.innovation_cov)},
          {"static_noise_cov", to_json(params.static_noise_cov)}};
}

PredVarParams params_from_json(const Json& j) {
  PredVarParams p;
  p.loadings = matrix_from_json(member(j, "loadings"));
  p.static_loadings = matrix_from_json(member(j, "static_loadings"));
  const Json& coeffs = member(j, "var_coeffs");
  if (!coeffs.is_array()) format_error("var_coeffs must be an array");
  for (const auto& b : coeffs) p.var_coeffs.push_back(matrix_from_json(b));
  p.innovation_cov = matrix_from_json(member(j, "innovation_cov"));
  p.static_noise_cov = matrix_from_json(member(j, "static_noise_cov"));
  return p;
}

void save_dataset(const fs::path& dir, const SyntheticDataset& dataset) {
  write_csv(dir / "y.csv", matrix_table(dataset.y.data(), numbered("y", dataset.y.dim())));
  write_csv(dir / "v_true.csv", matrix_table(dataset.v_true.data(), numbered("v", dataset.v_true.dim())));
  Json truth = params_to_json(dataset.params_true);
  truth["train"] = range_to_json(dataset.train);
  truth["test"] = range_to_json(dataset.test);
  truth["seed"] = dataset.seed;
  truth["generator"] = dataset.generator;
  write_json(dir / "truth.json", truth);
}

SyntheticDataset load_dataset(const fs::path& dir) {
  SyntheticDataset d;
  d.y = TimeSeries(table_matrix(read_csv(dir / "y.csv")));
  d.v_true = TimeSeries(table_matrix(read_csv(dir / "v_true.csv")));
  const Json truth = read_json(dir / "truth.json");
  d.params_true = params_from_json(truth);
  d.params_true.validate();
  d.train = range_from_json(member(truth, "train"));
  d.test = range_from_json(member(truth, "test"));
  d.seed = get<std::uint64_t>(truth, "seed");
  d.generator = get<std::string>(truth, "generator");
  if (d.y.length() != d.v_true.length()) format_error("y.csv and v_true.csv differ in length");
  if (d.y.dim() != d.params_true.p() || d.v_true.dim() != d.params_true.ell()) {
    throw Error(ErrorKind::DimensionError, "dataset files disagree with truth.json dimensions");
  }
  if (d.train.end() > d.length() || d.test.end() > d.length()) format_error("split ranges exceed the series length");
  const WeightMatrices w = weights_from_loadings(d.params_true);
  d.static_noise = TimeSeries((d.y.data() - d.v_true.data() * d.params_true.loadings.transpose()) * w.static_);
  return d;
}

Json fit_to_json(const FitResult& fit) {
  return {{"algorithm", to_string(fit.algorithm)},
          {"order", fit.order},
          {"params", params_to_json(fit.params)},
          {"weights", to_json(fit.weights.dlv)},
          {"static_weights", to_json(fit.weights.static_)},
          {"residual_cov", to_json(fit.residual_cov)},
          {"scaling", {{"mean", vector_to_json(fit.scaling.mean)}, {"scale", vector_to_json(fit.scaling.scale)}}},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"dlv_objective_trace", trace_to_json(fit.dlv_objective_trace)},
          {"proj_objective_trace", trace_to_json(fit.proj_objective_trace)}};
}

FitResult fit_from_json(const Json& j) {
  FitResult fit;
  try {
    fit.algorithm = algorithm_from_string(get<std::string>(j, "algorithm"));
  } catch (const Error& e) {
    format_error(e.what());
  }
  fit.order = get<std::size_t>(j, "order");
  fit.params = params_from_json(member(j, "params"));
  fit.weights.dlv = matrix_from_json(member(j, "weights"));
  fit.weights.static_ = matrix_from_json(member(j, "static_weights"));
  fit.residual_cov = matrix_from_json(member(j, "residual_cov"));
  const Json& scaling = member(j, "scaling");
  fit.scaling.mean = vector_from_json(member(scaling, "mean"));
  fit.scaling.scale = vector_from_json(member(scaling, "scale"));
  fit.iterations = get<std::size_t>(j, "iterations");
  fit.converged = get<bool>(j, "converged");
  fit.dlv_objective_trace = trace_from_json(member(j, "dlv_objective_trace"));
  fit.proj_objective_trace = trace_from_json(member(j, "proj_objective_trace"));
  validate_fit(fit);
  return fit;
}

Json diagnostics_json(const FitResult& fit) {
  const Matrix cov_diff =
      fit.weights.dlv.transpose() * fit.residual_cov * fit.weights.dlv - fit.params.innovation_cov;
  return {{"algorithm", to_string(fit.algorithm)},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"identity_residual", number_to_json(fit.identity_residual())},
          {"covariance_residual", number_to_json(cov_diff.norm())},
          {"covariance_residual_relative", number_to_json(fit.covariance_residual())},
          {"dlv_objective_trace", trace_to_json(fit.dlv_objective_trace)},
          {"proj_objective_trace", trace_to_json(fit.proj_objective_trace)}};
}

Json report_to_json(const EvalReport& report) {
  return {{"train", covariances_to_json(report.train)},
          {"test", covariances_to_json(report.test)},
          {"em_sig_pred_cov", to_json(report.em_sig_pred_cov)},
          {"projector_distance", number_to_json(report.projector_distance)},
          {"signal_angle_deg", number_to_json(report.signal_angle_deg)},
          {"signal_angle_max_deg", number_to_json(report.signal_angle_max_deg)}};
}

EvalReport report_from_json(const Json& j) {
  EvalReport r;
  r.train = covariances_from_json(member(j, "train"));
  r.test = covariances_from_json(member(j, "test"));
  r.em_sig_pred_cov = matrix_from_json(member(j, "em_sig_pred_cov"));
  r.projector_distance = number_from_json(member(j, "projector_distance"));
  r.signal_angle_deg = number_from_json(member(j, "signal_angle_deg"));
  r.signal_angle_max_deg = number_from_json(member(j, "signal_angle_max_deg"));
  return r;
}

CsvTable covariance_table(const EvalReport& report) {
  CsvTable t;
  t.header = {"figure", "split", "row", "col", "value"};
  for (Split s : {Split::Train, Split::Test}) {
    const ResidualCovariances& c = report.split(s);
    append_long(t, "meas_recon", to_string(s), c.meas_recon);
    append_long(t, "meas_pred", to_string(s), c.meas_pred);
    append_long(t, "sig_recon", to_string(s), c.sig_recon);
    append_long(t, "sig_pred", to_string(s), c.sig_pred);
  }
  append_long(t, "em_sig_pred", "", report.em_sig_pred_cov);
  return t;
}

CsvTable traces_table(const SensorTraces& traces) {
  CsvTable t;
  t.header = {"sample", "series", "value"};
  const std::pair<const char*, const Vector*> series[] = {{"truth", &traces.truth},
                                                          {"reconstructed", &traces.reconstructed},
                                                          {"predicted", &traces.predicted},
                                                          {"recon_error", &traces.recon_error},
                                                          {"pred_error", &traces.pred_error}};
  for (const auto& [name, values] : series) {
    for (Eigen::Index k = 0; k < values->size(); ++k) {
      t.rows.push_back({std::to_string(traces.first_sample + static_cast<std::size_t>(k)), name, format_double((*values)(k))});
    }
  }
  return t;
}

CsvTable sweep_table(const std::vector<SweepRow>& rows) {
  CsvTable t;
  t.header = {"samples", "algorithm", "seed", "projector_distance", "signal_angle_deg", "converged",
              "signal_angle_max_deg", "iterations", "error"};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.samples), to_string(r.algorithm), std::to_string(r.seed),
                      format_double(r.projector_distance), format_double(r.signal_angle_deg), r.converged ? "1" : "0",
                      format_double(r.signal_angle_max_deg), std::to_string(r.iterations), r.error});
  }
  return t;
}

std::vector<SweepRow> sweep_from_table(const CsvTable& table) {
  const std::size_t c_samples = table.column("samples");
  const std::size_t c_algo = table.column("algorithm");
  const std::size_t c_seed = table.column("seed");
  const std::size_t c_dist = table.column("projector_distance");
  const std::size_t c_angle = table.column("signal_angle_deg");
  const std::size_t c_conv = table.column("converged");
  const std::size_t c_max = table.column("signal_angle_max_deg");
  const std::size_t c_iter = table.column("iterations");
  const std::size_t c_err = table.column("error");
  std::vector<SweepRow> out;
  for (const auto& row : table.rows) {
    SweepRow r;
    r.samples = parse_index(row[c_samples]);
    try {
      r.algorithm = algorithm_from_string(row[c_algo]);
    } catch (const Error& e) {
      format_error(e.what());
    }
    r.seed = parse_index(row[c_seed]);
    r.projector_distance = parse_double(row[c_dist]);
    r.signal_angle_deg = parse_double(row[c_angle]);
    if (row[c_conv] != "0" && row[c_conv] != "1") format_error("converged must be 0 or 1");
    r.converged = row[c_conv] == "1";
    r.signal_angle_max_deg = parse_double(row[c_max]);
    r.iterations = parse_index(row[c_iter]);
    r.error = row[c_err];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace predvar::io
