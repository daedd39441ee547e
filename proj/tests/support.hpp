#pragma once

// Shared fixtures and independent reference implementations for the tests.

#include <cstdint>
#include <random>
#include <vector>

#include "predvar/estimate.hpp"
#include "predvar/lorenz.hpp"

namespace predvar::testing {

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols);
/// Random matrix with singular values in [lo, hi].
Matrix conditioned(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = 0.5, double hi = 2.0);
Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.1);

/// Per-lag least squares for the latent VAR, coded sample by sample: the
/// regressor row of sample k is [v_{k-1}^T ... v_{k-s}^T], solved by
/// column-pivoted QR on the design rather than by normal equations.
struct OlsFit {
  std::vector<Matrix> coeffs;  // B_1..B_s
  Matrix innovation_cov;
};
OlsFit per_lag_ols(const Matrix& latent, std::size_t order);

/// Loadings from regressing Y_s on the current latents V_s instead of the
/// predicted latents (the LaVAR-CCA form).
Matrix cca_style_loadings(const StackedData& stacks, const Matrix& weights);

/// Principal angles as arccos of the singular values of Qa^T Qb, degrees,
/// ascending.
std::vector<double> angles_by_arccos(const Matrix& a, const Matrix& b);

/// Classical fourth-order Runge-Kutta for the Lorenz system with the step
/// split into `substeps` pieces.
Matrix lorenz_reference(const LorenzConfig& config, std::size_t n, std::size_t substeps);

double median(std::vector<double> values);

}  // namespace predvar::testing
