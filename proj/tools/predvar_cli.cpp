// predvar: generate case-study data, fit, evaluate and sweep.
//
//   predvar generate --case paper --seed 7 --out data
//   predvar fit --data data --algo predvar --out fit
//   predvar evaluate --data data --model fit/model.json --out eval
//   predvar sweep --case paper --seeds 1,2,3 --jobs 4 --out sweep
//
// Every subcommand accepts --config FILE, a JSON object keyed by long flag
// names; flags given on the command line take precedence.
// Exit codes: 0 success, 1 runtime or numerical failure, 2 bad configuration.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "predvar/baselines.hpp"
#include "predvar/io.hpp"
#include "predvar/lorenz.hpp"
#include "predvar/metrics.hpp"

namespace fs = std::filesystem;
using namespace predvar;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct CaseOptions {
  std::string case_name = "paper";
  std::uint64_t seed = 0;
  std::size_t samples = 10000;
  std::size_t train = 3000;
  std::size_t test = 3000;
  std::string noise_variance = "diagonal";
  std::string integrator = "rk4";
  double dt = 0.01;
  // simulate only
  std::string model;
  std::size_t channels = 6;
  std::size_t model_order = 2;
  std::size_t model_latent_dim = 3;
  std::uint64_t model_seed = 0;
  double model_radius = 0.95;
  double model_min_ratio = 0.7;
};

struct FitOptions {
  std::size_t order = 2;
  std::size_t latent_dim = 3;
  double outer_tol = 1e-6;
  std::size_t outer_max_iter = 500;
  double inner_tol = 1e-8;
  std::size_t inner_max_iter = 100;
  double ridge = 0.0;
  std::string inner_basis = "procrustes";

  FitConfig config() const {
    FitConfig c;
    c.outer_tol = outer_tol;
    c.outer_max_iter = outer_max_iter;
    c.inner_tol = inner_tol;
    c.inner_max_iter = inner_max_iter;
    c.ridge = ridge;
    c.inner_basis = inner_basis == "literal" ? InnerBasis::Literal : InnerBasis::Procrustes;
    c.validate();
    return c;
  }
};

struct Options {
  CaseOptions data_case;
  FitOptions fit;
  std::string data;
  std::string algo = "predvar";
  std::string sweep_algo = "all";
  std::string range = "train";
  std::string model;
  bool truth = false;
  std::size_t sensor = 1;
  std::string trace_split = "test";
  std::vector<std::size_t> counts{1000, 2000, 3000, 4000, 5000, 6000, 7000, 8000, 9000, 10000};
  std::vector<std::uint64_t> seeds{0};
  std::size_t jobs = 1;
  std::string out = ".";
  std::string format = "csv";
};

void add_case_options(CLI::App* cmd, CaseOptions& o) {
  cmd->add_option("--case", o.case_name, "Data source")
      ->check(CLI::IsMember({"paper", "orth", "simulate"}))
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Noise seed")->capture_default_str();
  cmd->add_option("--samples", o.samples, "Series length")->capture_default_str();
  cmd->add_option("--train", o.train, "Training split: the first N samples")->capture_default_str();
  cmd->add_option("--test", o.test, "Test split: the last N samples")->capture_default_str();
  cmd->add_option("--noise-variance", o.noise_variance, "Static-noise covariance for Lorenz cases")
      ->check(CLI::IsMember({"diagonal", "full", "total"}))
      ->capture_default_str();
  cmd->add_option("--integrator", o.integrator)->check(CLI::IsMember({"rk4", "euler"}))->capture_default_str();
  cmd->add_option("--dt", o.dt, "Lorenz step size")->capture_default_str();
  cmd->add_option("--model", o.model, "simulate: parameters JSON (truth.json or model.json)");
  cmd->add_option("--channels", o.channels, "simulate: channels of a random model")->capture_default_str();
  cmd->add_option("--model-order", o.model_order, "simulate: VAR order of a random model")->capture_default_str();
  cmd->add_option("--model-latent-dim", o.model_latent_dim, "simulate: latent dimension of a random model")
      ->capture_default_str();
  cmd->add_option("--model-seed", o.model_seed, "simulate: seed of a random model")->capture_default_str();
  cmd->add_option("--model-radius", o.model_radius, "simulate: largest companion eigenvalue modulus")
      ->capture_default_str();
  cmd->add_option("--model-min-ratio", o.model_min_ratio,
                  "simulate: smallest companion eigenvalue modulus relative to the largest")
      ->capture_default_str();
}

void add_fit_options(CLI::App* cmd, FitOptions& o) {
  cmd->add_option("--order", o.order, "Latent VAR order s")->capture_default_str();
  cmd->add_option("--latent-dim", o.latent_dim, "Latent dimension ell")->capture_default_str();
  cmd->add_option("--outer-tol", o.outer_tol)->capture_default_str();
  cmd->add_option("--outer-max-iter", o.outer_max_iter)->capture_default_str();
  cmd->add_option("--inner-tol", o.inner_tol)->capture_default_str();
  cmd->add_option("--inner-max-iter", o.inner_max_iter)->capture_default_str();
  cmd->add_option("--ridge", o.ridge)->capture_default_str();
  cmd->add_option("--inner-basis", o.inner_basis)
      ->check(CLI::IsMember({"procrustes", "literal"}))
      ->capture_default_str();
}

std::vector<Algorithm> parse_algorithms(const std::string& text) {
  if (text == "all") return {Algorithm::OneShot, Algorithm::PredVar, Algorithm::Orth};
  std::vector<Algorithm> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    out.push_back(algorithm_from_string(text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

CaseStudyConfig case_config(const CaseOptions& o) {
  CaseStudyConfig c;
  c.samples = o.samples;
  c.train = o.train;
  c.test = o.test;
  c.noise_variance = o.noise_variance == "full"    ? NoiseVariance::Full
                     : o.noise_variance == "total" ? NoiseVariance::Total
                                                   : NoiseVariance::Diagonal;
  c.lorenz.integrator = o.integrator == "euler" ? Integrator::Euler : Integrator::Rk4;
  c.lorenz.dt = o.dt;
  return c;
}

SyntheticDataset simulated_dataset(const CaseOptions& o, std::uint64_t seed) {
  PredVarParams params;
  if (!o.model.empty()) {
    const io::Json j = io::read_json(o.model);
    params = io::params_from_json(j.contains("params") ? j.at("params") : j);
  } else {
    params = random_params(o.channels, o.model_latent_dim, o.model_order, o.model_seed, o.model_radius,
                           o.model_min_ratio);
  }
  return simulated_case(params, o.samples, o.train, o.test, seed);
}

SyntheticDataset make_dataset(const CaseOptions& o, std::uint64_t seed) {
  if (o.case_name == "simulate") return simulated_dataset(o, seed);
  const CaseStudyConfig c = case_config(o);
  return o.case_name == "orth" ? orth_case_study(seed, c) : paper_case_study(seed, c);
}

// ---- --config expansion ---------------------------------------------------------

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

std::string scalar_text(const io::Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// Appends "--key value" for each config entry whose flag is absent.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (!path) return args;
  const io::Json config = io::read_json(*path);
  if (!config.is_object()) throw Error(ErrorKind::ConfigError, *path + ": config must be a JSON object");
  for (const auto& [key, value] : config.items()) {
    const std::string flag = "--" + key;
    if (flag_given(args, flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& e : value) joined += (joined.empty() ? "" : ",") + scalar_text(e);
      args.push_back(flag);
      args.push_back(joined);
    } else {
      args.push_back(flag);
      args.push_back(scalar_text(value));
    }
  }
  return args;
}

// ---- subcommands ------------------------------------------------------------------

int cmd_generate(const Options& o) {
  const SyntheticDataset d = make_dataset(o.data_case, o.data_case.seed);
  io::save_dataset(o.out, d);
  spdlog::info("wrote {} samples x {} channels to {}", d.length(), d.y.dim(), o.out);
  return 0;
}

int cmd_fit(const Options& o) {
  const std::vector<Algorithm> algos = parse_algorithms(o.algo);
  const FitConfig config = o.fit.config();
  const SyntheticDataset d = io::load_dataset(o.data);
  const TimeSeries y = o.range == "all" ? d.y : d.y.slice(d.train.first, d.train.count);
  for (Algorithm algo : algos) {
    const FitResult fit = fit_algorithm(algo, y, o.fit.order, o.fit.latent_dim, config);
    const fs::path dir = algos.size() == 1 ? fs::path(o.out) : fs::path(o.out) / to_string(algo);
    io::write_json(dir / "model.json", io::fit_to_json(fit));
    io::write_json(dir / "diagnostics.json", io::diagnostics_json(fit));
    spdlog::info("{}: {} iterations, converged={}, ||R'P - I||={:.3g}", to_string(algo), fit.iterations, fit.converged,
                 fit.identity_residual());
    if (!fit.converged) spdlog::warn("{} did not converge", to_string(algo));
  }
  return 0;
}

int cmd_evaluate(const Options& o) {
  const SyntheticDataset d = io::load_dataset(o.data);
  if (o.truth == !o.model.empty()) throw Error(ErrorKind::ConfigError, "give exactly one of --model and --truth");
  const FitResult fit = o.truth ? truth_as_fit(d, o.fit.order) : io::fit_from_json(io::read_json(o.model));
  if (fit.p() != d.y.dim()) {
    throw Error(ErrorKind::DimensionError, "model has " + std::to_string(fit.p()) + " channels, data has " +
                                               std::to_string(d.y.dim()));
  }
  const EvalReport report = evaluate(d, fit);
  const SensorTraces traces = sensor_traces(d, fit, o.sensor, o.trace_split == "train" ? Split::Train : Split::Test);
  const fs::path out(o.out);
  io::write_json(out / "report.json", io::report_to_json(report));
  io::write_table(out / "fig_covariances", io::covariance_table(report), o.format);
  io::write_table(out / "sensor_traces", io::traces_table(traces), o.format);
  spdlog::info("projector distance {:.6g}, mean signal angle {:.4g} deg", report.projector_distance,
               report.signal_angle_deg);
  return 0;
}

int cmd_sweep(const Options& o, bool from_file) {
  SweepSpec spec;
  spec.sample_counts = o.counts;
  spec.algorithms = parse_algorithms(o.sweep_algo);
  spec.seeds = o.seeds;
  spec.order = o.fit.order;
  spec.ell = o.fit.latent_dim;
  spec.config = o.fit.config();

  DatasetFactory factory;
  if (from_file) {
    const SyntheticDataset stored = io::load_dataset(o.data);
    spec.seeds = {stored.seed};
    factory = [stored](std::uint64_t) { return stored; };
  } else {
    const CaseOptions c = o.data_case;
    factory = [c](std::uint64_t seed) { return make_dataset(c, seed); };
  }
  const std::vector<SweepRow> rows = consistency_sweep(factory, spec, o.jobs);
  const io::CsvTable table = io::sweep_table(rows);
  io::write_table(fs::path(o.out) / "sweep", table, o.format);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.ok() ? 0 : 1;
  spdlog::info("{} cells, {} failed", rows.size(), failed);
  return failed == rows.size() ? kExitRuntime : 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_st("predvar");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("PREDVAR_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  Options o;
  CLI::App app{"Reduced-dimensional VAR with oblique signal/noise projections", "predvar"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "Write y.csv, v_true.csv and truth.json");
  add_case_options(generate, o.data_case);
  generate->add_option("--out", o.out, "Output directory")->capture_default_str();

  auto* fit = app.add_subcommand("fit", "Fit a model; writes model.json and diagnostics.json");
  fit->add_option("--data", o.data, "Dataset directory")->required();
  fit->add_option("--algo", o.algo, "predvar, oneshot, orth, a comma list, or all")->capture_default_str();
  fit->add_option("--range", o.range, "Samples to fit on")->check(CLI::IsMember({"train", "all"}))->capture_default_str();
  add_fit_options(fit, o.fit);
  fit->add_option("--out", o.out, "Output directory")->capture_default_str();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Write report.json and plot data");
  evaluate_cmd->add_option("--data", o.data, "Dataset directory")->required();
  evaluate_cmd->add_option("--model", o.model, "model.json from fit");
  evaluate_cmd->add_flag("--truth", o.truth, "Evaluate the true parameters instead of a fit");
  evaluate_cmd->add_option("--order", o.fit.order, "VAR order fitted to true latents with --truth")->capture_default_str();
  evaluate_cmd->add_option("--sensor", o.sensor, "Zero-based sensor for sensor_traces")->capture_default_str();
  evaluate_cmd->add_option("--trace-split", o.trace_split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  evaluate_cmd->add_option("--format", o.format, "Plot data format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  evaluate_cmd->add_option("--out", o.out, "Output directory")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Fit on growing prefixes; writes sweep.csv");
  add_case_options(sweep, o.data_case);
  sweep->add_option("--data", o.data, "Dataset directory; overrides --case and --seeds");
  sweep->add_option("--algo", o.sweep_algo, "predvar, oneshot, orth, a comma list, or all")->capture_default_str();
  sweep->add_option("--counts", o.counts, "Prefix lengths")->delimiter(',')->capture_default_str();
  sweep->add_option("--seeds", o.seeds, "Noise seeds")->delimiter(',')->capture_default_str();
  sweep->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--format", o.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  add_fit_options(sweep, o.fit);
  sweep->add_option("--out", o.out, "Output directory")->capture_default_str();

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (generate->parsed()) return cmd_generate(o);
    if (fit->parsed()) return cmd_fit(o);
    if (evaluate_cmd->parsed()) return cmd_evaluate(o);
    return cmd_sweep(o, !o.data.empty());
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == ErrorKind::ConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
