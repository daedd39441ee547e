#pragma once

// The generative model: y_k = P v_k + Pbar ebar_k with latent VAR(s) dynamics
// v_k = sum_j B_j v_{k-j} + e_k.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "predvar/numlin.hpp"

namespace predvar {

struct PredVarParams {
  Matrix loadings;                  ///< P, p x ell
  Matrix static_loadings;           ///< Pbar, p x (p - ell)
  std::vector<Matrix> var_coeffs;   ///< B_1..B_s, each ell x ell; empty when the latent process is not a VAR
  Matrix innovation_cov;            ///< Sigma_eps, ell x ell; 0 x 0 when unknown
  Matrix static_noise_cov;          ///< Sigma_epsbar, (p - ell) x (p - ell)

  std::size_t p() const noexcept { return static_cast<std::size_t>(loadings.rows()); }
  std::size_t ell() const noexcept { return static_cast<std::size_t>(loadings.cols()); }
  std::size_t order() const noexcept { return var_coeffs.size(); }
  bool has_dynamics() const noexcept { return !var_coeffs.empty() && innovation_cov.size() > 0; }

  /// Shape, nonsingularity of [P Pbar] and PSD checks. Throws on violation.
  void validate() const;
};

/// Dual basis to the loadings: [R Rbar]^T [P Pbar] = I.
struct WeightMatrices {
  Matrix dlv;      ///< R, p x ell
  Matrix static_;  ///< Rbar, p x (p - ell)
};

struct ReducedRankVar {
  std::vector<Matrix> coeffs;  ///< A_j = P B_j R^T
  Matrix residual_cov;         ///< Sigma_e = P Sigma_eps P^T + Pbar Sigma_epsbar Pbar^T
};

WeightMatrices weights_from_loadings(const PredVarParams& params);
WeightMatrices weights_from_loadings(const Matrix& loadings, const Matrix& static_loadings);

/// P R^T. Throws NotDualPair unless R^T P = I within 1e-8.
Matrix oblique_projector(const Matrix& loadings, const Matrix& weights);

/// Block companion matrix of the latent VAR (s*ell square).
Matrix companion_matrix(std::span<const Matrix> var_coeffs);
double spectral_radius(const Matrix& square);

struct SimulatedSeries {
  TimeSeries y;
  TimeSeries v;
};

/// Draws n + s samples of (y, v) from zero latent history after discarding
/// burn_in steps. Deterministic in `seed`.
SimulatedSeries simulate(const PredVarParams& params, std::size_t n, std::uint64_t seed, std::size_t burn_in = 500);

/// sum_j B_j v_{k-j}; history[0] is v_{k-1}.
Vector one_step_predict(std::span<const Matrix> var_coeffs, std::span<const Vector> history);

ReducedRankVar to_reduced_rank_var(const PredVarParams& params);

/// Observationally equivalent parameters under latent basis change m and
/// static-noise basis change m_bar.
PredVarParams equivalent_transform(const PredVarParams& params, const Matrix& m, const Matrix& m_bar);

/// Draws a random stable parameter tuple with cond([P Pbar]) below about 7.
/// The companion spectral radius lies in [0.7, 1] * max_spectral_radius and
/// every companion eigenvalue modulus is at least min_modulus_ratio times it.
PredVarParams random_params(std::size_t p, std::size_t ell, std::size_t s, std::uint64_t seed,
                            double max_spectral_radius = 0.9, double min_modulus_ratio = 0.4);

}  // namespace predvar
