#include "predvar/metrics.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <numeric>
#include <string>

namespace predvar {

namespace {

// Row-aligned signal streams over the split, after the s history samples.
struct SignalStreams {
  std::size_t first_sample = 0;
  Matrix y;              ///< measurements
  Matrix truth;          ///< P v
  Matrix reconstructed;  ///< P^ R^^T y
  Matrix predicted;      ///< P^ v~
};

SignalStreams signal_streams(const SyntheticDataset& dataset, const FitResult& fit, Split split) {
  const auto p = static_cast<Eigen::Index>(fit.p());
  if (static_cast<Eigen::Index>(dataset.y.dim()) != p || dataset.params_true.loadings.rows() != p) {
    throw Error(ErrorKind::DimensionError, "model has " + std::to_string(p) + " channels, data has " +
                                               std::to_string(dataset.y.dim()));
  }
  const IndexRange range = split_range(dataset, split);
  const std::size_t s = fit.order;
  if (range.count < s + 2) {
    throw Error(ErrorKind::InsufficientData, to_string(split) + " split too short for prediction history");
  }
  const Matrix y = dataset.y.slice(range.first, range.count).data();
  const Matrix v_true = dataset.v_true.slice(range.first, range.count).data();
  const auto n = static_cast<Eigen::Index>(range.count - s);
  const auto lag = static_cast<Eigen::Index>(s);

  const Matrix projector = fit.projector_original();
  const Matrix latent = fit.latent_of(y);  // scaled coordinates
  Matrix predicted_latent = Matrix::Zero(n, latent.cols());
  for (std::size_t j = 1; j <= s; ++j) {
    predicted_latent.noalias() +=
        latent.middleRows(lag - static_cast<Eigen::Index>(j), n) * fit.params.var_coeffs[j - 1].transpose();
  }
  const Vector offset = projector * fit.scaling.mean;

  SignalStreams out;
  out.first_sample = range.first + s;
  out.y = y.bottomRows(n);
  out.truth = v_true.bottomRows(n) * dataset.params_true.loadings.transpose();
  out.reconstructed = out.y * projector.transpose();
  out.predicted = (predicted_latent * fit.loadings_original().transpose()).rowwise() + offset.transpose();
  return out;
}

Matrix cov_of(const Matrix& rows) { return symmetrize(sample_covariance(TimeSeries(rows))); }

SweepRow run_cell(const SyntheticDataset& dataset, std::size_t count, Algorithm algo, const SweepSpec& spec) {
  SweepRow row;
  row.samples = count;
  row.algorithm = algo;
  row.seed = dataset.seed;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    const FitResult fit = fit_algorithm(algo, dataset.y.slice(0, count), spec.order, spec.ell, spec.config);
    row.converged = fit.converged;
    row.iterations = fit.iterations;
    row.projector_distance = projector_distance(dataset, fit);
    const std::vector<double> angles = signal_angles(dataset, fit);
    row.signal_angle_deg = std::accumulate(angles.begin(), angles.end(), 0.0) / static_cast<double>(angles.size());
    row.signal_angle_max_deg = angles.back();
  } catch (const Error& e) {
    row.error = std::string(to_string(e.kind()));
  } catch (const std::exception& e) {
    row.error = "Unexpected";
  }
  if (!row.ok()) {
    row.projector_distance = nan;
    row.signal_angle_deg = nan;
    row.signal_angle_max_deg = nan;
  }
  return row;
}

struct Cells {
  std::vector<SyntheticDataset> datasets;
  std::size_t per_seed = 0;

  std::size_t size() const noexcept { return datasets.size() * per_seed; }
};

Cells prepare(const DatasetFactory& make_dataset, const SweepSpec& spec) {
  if (spec.sample_counts.empty() || spec.algorithms.empty() || spec.seeds.empty()) {
    throw Error(ErrorKind::ConfigError, "sweep needs at least one count, algorithm and seed");
  }
  Cells cells;
  cells.per_seed = spec.sample_counts.size() * spec.algorithms.size();
  const std::size_t longest = *std::max_element(spec.sample_counts.begin(), spec.sample_counts.end());
  for (std::uint64_t seed : spec.seeds) {
    cells.datasets.push_back(make_dataset(seed));
    if (longest > cells.datasets.back().length()) {
      throw Error(ErrorKind::ConfigError, "sample count " + std::to_string(longest) + " exceeds dataset length " +
                                              std::to_string(cells.datasets.back().length()));
    }
  }
  return cells;
}

SweepRow run_index(const Cells& cells, const SweepSpec& spec, std::size_t index) {
  const std::size_t seed_idx = index / cells.per_seed;
  const std::size_t rest = index % cells.per_seed;
  const std::size_t count = spec.sample_counts[rest / spec.algorithms.size()];
  const Algorithm algo = spec.algorithms[rest % spec.algorithms.size()];
  return run_cell(cells.datasets[seed_idx], count, algo, spec);
}

}  // namespace

std::string to_string(Split split) { return split == Split::Train ? "train" : "test"; }

IndexRange split_range(const SyntheticDataset& dataset, Split split) {
  const IndexRange r = split == Split::Train ? dataset.train : dataset.test;
  if (r.end() > dataset.length()) throw Error(ErrorKind::IndexError, to_string(split) + " split exceeds the dataset");
  return r;
}

ResidualCovariances residual_covariances(const SyntheticDataset& dataset, const FitResult& fit, Split split) {
  const SignalStreams st = signal_streams(dataset, fit, split);
  ResidualCovariances out;
  out.meas_recon = cov_of(st.y - st.reconstructed);
  out.meas_pred = cov_of(st.y - st.predicted);
  out.sig_recon = cov_of(st.reconstructed - st.truth);
  out.sig_pred = cov_of(st.predicted - st.truth);
  return out;
}

Matrix em_signal_prediction_cov(const FitResult& fit) { return fit.innovation_cov_signal_original(); }

double projector_distance(const SyntheticDataset& dataset, const FitResult& fit) {
  const PredVarParams& truth = dataset.params_true;
  const WeightMatrices w = weights_from_loadings(truth.loadings, truth.static_loadings);
  return frobenius_distance(truth.loadings * w.dlv.transpose(), fit.projector_original());
}

std::vector<double> signal_angles(const SyntheticDataset& dataset, const FitResult& fit) {
  return canonical_angles(dataset.params_true.loadings, fit.loadings_original());
}

double signal_subspace_angle(const SyntheticDataset& dataset, const FitResult& fit) {
  const std::vector<double> a = signal_angles(dataset, fit);
  return std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
}

double signal_subspace_max_angle(const SyntheticDataset& dataset, const FitResult& fit) {
  return signal_angles(dataset, fit).back();
}

SensorTraces sensor_traces(const SyntheticDataset& dataset, const FitResult& fit, std::size_t sensor, Split split) {
  if (sensor >= fit.p()) {
    throw Error(ErrorKind::IndexError, "sensor " + std::to_string(sensor) + " out of range for " +
                                           std::to_string(fit.p()) + " channels");
  }
  const SignalStreams st = signal_streams(dataset, fit, split);
  const auto c = static_cast<Eigen::Index>(sensor);
  SensorTraces out;
  out.sensor = sensor;
  out.first_sample = st.first_sample;
  out.truth = st.truth.col(c);
  out.reconstructed = st.reconstructed.col(c);
  out.predicted = st.predicted.col(c);
  out.recon_error = out.reconstructed - out.truth;
  out.pred_error = out.predicted - out.truth;
  return out;
}

EvalReport evaluate(const SyntheticDataset& dataset, const FitResult& fit) {
  EvalReport r;
  r.train = residual_covariances(dataset, fit, Split::Train);
  r.test = residual_covariances(dataset, fit, Split::Test);
  r.em_sig_pred_cov = em_signal_prediction_cov(fit);
  r.projector_distance = projector_distance(dataset, fit);
  const std::vector<double> angles = signal_angles(dataset, fit);
  r.signal_angle_deg = std::accumulate(angles.begin(), angles.end(), 0.0) / static_cast<double>(angles.size());
  r.signal_angle_max_deg = angles.back();
  return r;
}

FitResult truth_as_fit(const SyntheticDataset& dataset, std::size_t order) {
  const PredVarParams& truth = dataset.params_true;
  FitResult fit;
  fit.algorithm = Algorithm::PredVar;
  fit.params = truth;
  fit.weights = weights_from_loadings(truth.loadings, truth.static_loadings);
  fit.scaling = Scaling::identity(truth.p());
  if (truth.has_dynamics()) {
    fit.order = truth.order();
  } else {
    fit.order = order;
    const IndexRange range = split_range(dataset, Split::Train);
    const StackedData stacks(dataset.v_true.slice(range.first, range.count).data(), order);
    const auto l = static_cast<Eigen::Index>(truth.ell());
    const DynamicsEstimate dyn = update_dynamics(extract_dlvs(stacks, Matrix::Identity(l, l)));
    fit.params.var_coeffs = dyn.coeffs();
    fit.params.innovation_cov = dyn.innovation_cov;
  }
  fit.residual_cov = to_reduced_rank_var(fit.params).residual_cov;
  fit.converged = true;
  return fit;
}

std::vector<SweepRow> consistency_sweep(const DatasetFactory& make_dataset, const SweepSpec& spec, std::size_t jobs) {
  const Cells cells = prepare(make_dataset, spec);
  std::vector<SweepRow> rows(cells.size());
  const auto total = static_cast<long>(cells.size());
  const int threads = static_cast<int>(std::max<std::size_t>(1, jobs));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long i = 0; i < total; ++i) rows[static_cast<std::size_t>(i)] = run_index(cells, spec, static_cast<std::size_t>(i));
  return rows;
}

std::vector<SweepRow> consistency_sweep_serial(const DatasetFactory& make_dataset, const SweepSpec& spec) {
  const Cells cells = prepare(make_dataset, spec);
  std::vector<SweepRow> rows;
  rows.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) rows.push_back(run_index(cells, spec, i));
  return rows;
}

}  // namespace predvar
