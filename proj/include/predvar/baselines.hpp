#pragma once

// Benchmark estimators sharing the FitResult contract of fit_predvar.

#include <cstddef>

#include "predvar/estimate.hpp"

namespace predvar {

/// Same alternation as fit_predvar, but the weights come from the natural
/// filter R = P (P^T P)^{-1} and the decorrelation constraint is not imposed.
/// The returned weights are an orthonormal basis of span(P) and P = R.
FitResult fit_orth(const TimeSeries& y, std::size_t order, std::size_t ell, const FitConfig& config = {});

/// How the one-shot estimator finds span(P) before its single dynamics fit.
enum class OneShotMethod {
  /// Leading eigenvectors of sum_{j=1..s} Gamma(j) Gamma(j)^T, Gamma(j) the
  /// lag-j sample autocovariance.
  Autocovariance,
  /// Leading left singular vectors of the side-by-side full-VAR(s)
  /// coefficient matrices [A_1 ... A_s].
  CoefficientSvd,
};

/// Identifies the oblique projection once (span(P) from `method`, then R from
/// the decorrelation constraint with the full-VAR residual covariance) and
/// fits the latent dynamics a single time. No alternation.
FitResult fit_oneshot(const TimeSeries& y, std::size_t order, std::size_t ell, const FitConfig& config = {},
                      OneShotMethod method = OneShotMethod::Autocovariance);

/// Dispatch by algorithm tag.
FitResult fit_algorithm(Algorithm algo, const TimeSeries& y, std::size_t order, std::size_t ell,
                        const FitConfig& config = {});

}  // namespace predvar
