#pragma once

// Evaluation of a fitted model against a synthetic dataset with known truth.
// Everything is reported in the original measurement units.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "predvar/baselines.hpp"
#include "predvar/lorenz.hpp"

namespace predvar {

enum class Split { Train, Test };

std::string to_string(Split split);
IndexRange split_range(const SyntheticDataset& dataset, Split split);

/// Sample covariances of the four residual streams on one split.
struct ResidualCovariances {
  Matrix meas_recon;  ///< y - P^ R^^T y
  Matrix meas_pred;   ///< y - P^ v~
  Matrix sig_recon;   ///< P^ R^^T y - P v
  Matrix sig_pred;    ///< P^ v~ - P v
};

/// The first s samples of the split only serve as prediction history, so
/// all four streams cover the remaining count - s samples. Throws
/// InsufficientData when fewer than two samples remain.
ResidualCovariances residual_covariances(const SyntheticDataset& dataset, const FitResult& fit, Split split);

/// P^ Sigma^_eps P^^T in original units.
Matrix em_signal_prediction_cov(const FitResult& fit);

/// ||P R^T - P^ R^^T||_F with the true R from the true (P, Pbar).
double projector_distance(const SyntheticDataset& dataset, const FitResult& fit);

/// Canonical angles between span(P) and span(P^), ascending, degrees.
std::vector<double> signal_angles(const SyntheticDataset& dataset, const FitResult& fit);
/// Mean canonical angle.
double signal_subspace_angle(const SyntheticDataset& dataset, const FitResult& fit);
/// Largest canonical angle.
double signal_subspace_max_angle(const SyntheticDataset& dataset, const FitResult& fit);

/// Five aligned series for one sensor over samples first_sample, first_sample + 1, ...
struct SensorTraces {
  std::size_t sensor = 0;
  std::size_t first_sample = 0;
  Vector truth;          ///< (P v)_sensor
  Vector reconstructed;  ///< (P^ R^^T y)_sensor
  Vector predicted;      ///< (P^ v~)_sensor
  Vector recon_error;    ///< reconstructed - truth
  Vector pred_error;     ///< predicted - truth

  std::size_t length() const noexcept { return static_cast<std::size_t>(truth.size()); }
};

/// Zero-based sensor index; throws IndexError when sensor >= p.
SensorTraces sensor_traces(const SyntheticDataset& dataset, const FitResult& fit, std::size_t sensor, Split split);

struct EvalReport {
  ResidualCovariances train;
  ResidualCovariances test;
  Matrix em_sig_pred_cov;
  double projector_distance = 0.0;
  double signal_angle_deg = 0.0;
  double signal_angle_max_deg = 0.0;

  const ResidualCovariances& split(Split s) const { return s == Split::Train ? train : test; }
};

EvalReport evaluate(const SyntheticDataset& dataset, const FitResult& fit);

/// The true parameters packaged as a FitResult with identity scaling. Without
/// true VAR coefficients, B and Sigma_eps are fitted by least squares to the
/// true latents over the training split.
FitResult truth_as_fit(const SyntheticDataset& dataset, std::size_t order);

struct SweepSpec {
  std::vector<std::size_t> sample_counts;
  std::vector<Algorithm> algorithms;
  std::vector<std::uint64_t> seeds;
  std::size_t order = 2;
  std::size_t ell = 3;
  FitConfig config;
};

struct SweepRow {
  std::size_t samples = 0;
  Algorithm algorithm = Algorithm::PredVar;
  std::uint64_t seed = 0;
  double projector_distance = 0.0;
  double signal_angle_deg = 0.0;
  double signal_angle_max_deg = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  std::string error;  ///< empty on success; metric fields are NaN otherwise

  bool ok() const noexcept { return error.empty(); }
};

using DatasetFactory = std::function<SyntheticDataset(std::uint64_t seed)>;

/// One row per (seed, count, algorithm), ordered by seed, then count, then
/// algorithm as listed. Each cell fits on the first `count` samples. Fit
/// failures are recorded in the row instead of thrown. Cells run on up to
/// `jobs` OpenMP threads; the rows do not depend on `jobs`.
std::vector<SweepRow> consistency_sweep(const DatasetFactory& make_dataset, const SweepSpec& spec, std::size_t jobs = 1);

/// Plain loop over the same cells, for testing and benchmarking.
std::vector<SweepRow> consistency_sweep_serial(const DatasetFactory& make_dataset, const SweepSpec& spec);

}  // namespace predvar
