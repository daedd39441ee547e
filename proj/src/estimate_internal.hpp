#pragma once

#include <functional>

#include "predvar/estimate.hpp"

namespace predvar::detail {

enum class WeightRule { Constrained, NaturalFilter };

ObliqueFit projection_loop(const LaggedMoments& moments, const Matrix& stacked_coeffs, const Matrix& initial_weights,
                           const FitConfig& config, WeightRule rule);

/// Full alternating driver shared by PredVAR and ORTH.
FitResult alternate(const TimeSeries& y, std::size_t order, std::size_t ell, const FitConfig& config, WeightRule rule);

/// N log|C| + trace(C^{-1} G) for a residual Gram matrix G. Throws
/// SingularCovariance when C is not numerically positive definite.
double gaussian_objective(const Matrix& cov, const Matrix& residual_gram, std::size_t samples);

/// Objective value, or NaN when its covariance is singular.
double objective_or_nan(const std::function<double()>& fn);

}  // namespace predvar::detail
