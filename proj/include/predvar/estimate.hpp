#pragma once

// Alternating estimation of the latent VAR dynamics and the oblique
// signal/noise projection.
//
// Each outer iteration extracts the latent series with the current weights,
// refits the latent VAR by least squares, and then refines (P, R, Sigma_e)
// with the dynamics held fixed. The weights come from the statistical
// constraint R^T Sigma_e Rbar = 0 rather than from R^T P = I; the latter
// identity is recovered at convergence.
//
// The loadings update regresses Y_s on the *predicted* latents V B. A
// LaVAR-CCA style update would regress on V_s instead; that form is kept
// only as a test comparator.

#include <cstddef>
#include <string>
#include <vector>

#include "predvar/model.hpp"
#include "predvar/numlin.hpp"

namespace predvar {

/// Lag-shifted views of a (scaled) measurement series of length N + s.
/// Y_i has rows y_{i+1}, ..., y_{i+N} (one-based), i = 0..s.
class StackedData {
 public:
  StackedData(Matrix series, std::size_t order);

  std::size_t order() const noexcept { return order_; }
  std::size_t samples() const noexcept { return samples_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(series_.cols()); }
  const Matrix& series() const noexcept { return series_; }

  auto y(std::size_t i) const {
    return series_.middleRows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(samples_));
  }
  auto target() const { return y(order_); }

 private:
  Matrix series_;
  std::size_t order_;
  std::size_t samples_;
};

enum class Execution { Serial, Parallel };

/// Sums of lag-shifted cross products Y_i^T Y_j, i, j = 0..s, over the N
/// stacked samples. Every update of the alternating fit reads the data only
/// through these.
class LaggedMoments {
 public:
  /// Parallel mode sums fixed-size row chunks with OpenMP and reduces them in
  /// chunk order; the result is independent of the thread count. Serial mode
  /// accumulates one outer product per sample.
  explicit LaggedMoments(const StackedData& stacks, Execution exec = Execution::Parallel);

  std::size_t order() const noexcept { return order_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t samples() const noexcept { return samples_; }

  /// (s+1)p x (s+1)p, block (i, j) = Y_i^T Y_j.
  const Matrix& all() const noexcept { return all_; }
  Matrix block(std::size_t i, std::size_t j) const;

  /// U^T U for U = [Y_{s-1} ... Y_0].
  const Matrix& lagged_gram() const noexcept { return lagged_gram_; }
  /// U^T Y_s.
  const Matrix& lagged_target() const noexcept { return lagged_target_; }
  /// Y_s^T Y_s.
  const Matrix& target_gram() const noexcept { return target_gram_; }

 private:
  std::size_t order_;
  std::size_t dim_;
  std::size_t samples_;
  Matrix all_;
  Matrix lagged_gram_;
  Matrix lagged_target_;
  Matrix target_gram_;
};

/// Latent stacks for a given weight matrix.
struct DlvStacks {
  Matrix latent;  ///< full latent series (N + s) x ell; V_i = latent.middleRows(i, N)
  Matrix lagged;  ///< [V_{s-1} ... V_0], N x (s ell); block j-1 holds lag j
  std::size_t order = 0;
  std::size_t samples = 0;

  auto v(std::size_t i) const {
    return latent.middleRows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(samples));
  }
  auto target() const { return v(order); }
};

/// Stacked coefficients [B_1^T; ...; B_s^T] and the innovation covariance.
struct DynamicsEstimate {
  Matrix stacked;         ///< (s ell) x ell
  Matrix innovation_cov;  ///< ell x ell

  std::vector<Matrix> coeffs() const;
};

std::vector<Matrix> unstack_coeffs(const Matrix& stacked, std::size_t order);
Matrix stack_coeffs(const std::vector<Matrix>& coeffs);

struct LoadingsEstimate {
  Matrix loadings;      ///< P, p x ell
  Matrix residual_cov;  ///< Sigma_e, p x p
};

/// Choice of orthonormal basis for span(R) inside the projection loop.
///
/// The constraint step fixes only span(R). `Literal` keeps the basis returned
/// by the SVD. `Procrustes` rotates it to the one closest to the previous
/// weights.
enum class InnerBasis { Literal, Procrustes };

struct FitConfig {
  double outer_tol = 1e-6;
  std::size_t outer_max_iter = 500;
  double inner_tol = 1e-8;
  std::size_t inner_max_iter = 100;
  double ridge = 0.0;
  InnerBasis inner_basis = InnerBasis::Procrustes;

  void validate() const;
};

enum class Algorithm { PredVar, OneShot, Orth };

std::string to_string(Algorithm algo);
Algorithm algorithm_from_string(const std::string& name);

/// Per-channel affine map applied before fitting: scaled = (y - mean) / scale.
struct Scaling {
  Vector mean;
  Vector scale;

  static Scaling identity(std::size_t p);
  static Scaling zscore(const TimeSeries& y);

  Matrix apply(const Matrix& rows) const;
};

struct FitResult {
  Algorithm algorithm = Algorithm::PredVar;
  PredVarParams params;          ///< scaled coordinates
  WeightMatrices weights;        ///< scaled coordinates
  Matrix residual_cov;           ///< Sigma_e, scaled coordinates
  Scaling scaling;
  std::size_t order = 0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> dlv_objective_trace;
  std::vector<double> proj_objective_trace;

  std::size_t p() const noexcept { return params.p(); }
  std::size_t ell() const noexcept { return params.ell(); }

  // Quantities in the original measurement units.
  Matrix loadings_original() const;   ///< D P
  Matrix weights_original() const;    ///< D^{-1} R
  Matrix projector_original() const;  ///< D P R^T D^{-1}
  Matrix innovation_cov_signal_original() const;  ///< D P Sigma_eps P^T D

  /// Latent series R^T (y_k - mean) / scale for original-unit rows.
  Matrix latent_of(const Matrix& y_rows) const;

  double identity_residual() const;    ///< ||R^T P - I||_F
  double covariance_residual() const;  ///< ||R^T Sigma_e R - Sigma_eps||_F / ||Sigma_eps||_F
};

/// Shape, symmetry and PSD checks shared by every estimator. The R^T R = I
/// check is skipped for the ORTH variant.
void validate_fit(const FitResult& fit);

// ---- building blocks -------------------------------------------------------

StackedData build_stacks(const TimeSeries& y, std::size_t order);

/// Top-ell principal directions of Y_s^T Y_s / N.
Matrix init_weights(const StackedData& stacks, std::size_t ell);

DlvStacks extract_dlvs(const StackedData& stacks, const Matrix& weights);

DynamicsEstimate update_dynamics(const DlvStacks& dlvs, double ridge = 0.0);

double dlv_objective(const DlvStacks& dlvs, const Matrix& stacked_coeffs, const Matrix& innovation_cov);

LoadingsEstimate update_loadings(const StackedData& stacks, const DlvStacks& dlvs, const Matrix& stacked_coeffs,
                                 double ridge = 0.0);

double proj_objective(const StackedData& stacks, const DlvStacks& dlvs, const Matrix& stacked_coeffs,
                      const Matrix& loadings, const Matrix& residual_cov);

// Same quantities computed from lagged moments; they agree with the
// data-based versions up to rounding.
DynamicsEstimate update_dynamics(const LaggedMoments& moments, const Matrix& weights, double ridge = 0.0);
double dlv_objective(const LaggedMoments& moments, const Matrix& weights, const Matrix& stacked_coeffs,
                     const Matrix& innovation_cov);
LoadingsEstimate update_loadings(const LaggedMoments& moments, const Matrix& weights, const Matrix& stacked_coeffs,
                                 double ridge = 0.0);
double proj_objective(const LaggedMoments& moments, const Matrix& weights, const Matrix& stacked_coeffs,
                      const Matrix& loadings, const Matrix& residual_cov);

/// Rbar spans null(P^T); R spans the left null space of Sigma_e Rbar.
WeightMatrices constrained_weights(const Matrix& loadings, const Matrix& residual_cov);

struct ObliqueFit {
  Matrix loadings;
  WeightMatrices weights;
  Matrix residual_cov;
  Matrix stacked_coeffs;  ///< frozen dynamics expressed in the returned latent basis
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> proj_objective_trace;
};

/// Inner projection loop with the dynamics held fixed.
ObliqueFit fit_oblique(const StackedData& stacks, const Matrix& stacked_coeffs, const Matrix& initial_weights,
                       const FitConfig& config);

FitResult fit_predvar(const TimeSeries& y, std::size_t order, std::size_t ell, const FitConfig& config = {});

// Internal pieces shared with the baselines.
namespace detail {

void check_fit_dims(const TimeSeries& y, std::size_t order, std::size_t ell);
double relative_change(const Matrix& current, const Matrix& previous);
Matrix rebase_coeffs(const Matrix& stacked_coeffs, const Matrix& m, std::size_t order);
/// Complete (Pbar, Sigma_epsbar) from the fitted (P, R, Rbar, Sigma_e).
void complete_static_part(FitResult& fit);

}  // namespace detail

}  // namespace predvar
