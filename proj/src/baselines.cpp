#include "predvar/baselines.hpp"

#include "estimate_internal.hpp"

namespace predvar {

namespace {

struct FullVar {
  Matrix coeffs;        ///< (s p) x p, block j-1 holds A_j^T
  Matrix residual_cov;  ///< p x p
};

FullVar fit_full_var(const StackedData& stacks, double ridge) {
  const auto p = static_cast<Eigen::Index>(stacks.dim());
  const auto n = static_cast<Eigen::Index>(stacks.samples());
  const std::size_t s = stacks.order();
  Matrix lagged(n, p * static_cast<Eigen::Index>(s));
  for (std::size_t j = 1; j <= s; ++j) lagged.middleCols(static_cast<Eigen::Index>(j - 1) * p, p) = stacks.y(s - j);
  const Matrix target = stacks.target();

  FullVar out;
  if (ridge > 0.0) {
    Matrix gram = lagged.transpose() * lagged;
    gram.diagonal().array() += ridge;
    out.coeffs = spd_solve(gram, lagged.transpose() * target);
  } else {
    // Minimum-norm least squares.
    out.coeffs = Eigen::CompleteOrthogonalDecomposition<Matrix>(lagged).solve(target);
  }
  const Matrix resid = target - lagged * out.coeffs;
  out.residual_cov = symmetrize(resid.transpose() * resid / static_cast<double>(n));
  return out;
}

Matrix signal_basis_autocovariance(const Matrix& series, std::size_t lags, std::size_t ell) {
  const auto n = series.rows();
  const auto p = series.cols();
  Matrix accum = Matrix::Zero(p, p);
  for (std::size_t j = 1; j <= lags; ++j) {
    const auto lag = static_cast<Eigen::Index>(j);
    const Matrix gamma = series.bottomRows(n - lag).transpose() * series.topRows(n - lag) / static_cast<double>(n);
    accum.noalias() += gamma * gamma.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(accum));
  return eig.eigenvectors().rightCols(static_cast<Eigen::Index>(ell)).rowwise().reverse();
}

Matrix signal_basis_coefficients(const Matrix& coeffs, std::size_t order, std::size_t ell) {
  const auto p = coeffs.cols();
  Matrix side_by_side(p, p * static_cast<Eigen::Index>(order));
  for (std::size_t j = 0; j < order; ++j) {
    side_by_side.middleCols(static_cast<Eigen::Index>(j) * p, p) = coeffs.middleRows(static_cast<Eigen::Index>(j) * p, p).transpose();
  }
  return svd_full(side_by_side).left.rightCols(static_cast<Eigen::Index>(ell)).rowwise().reverse();
}

}  // namespace

FitResult fit_orth(const TimeSeries& y, std::size_t order, std::size_t ell, const FitConfig& config) {
  return detail::alternate(y, order, ell, config, detail::WeightRule::NaturalFilter);
}

FitResult fit_oneshot(const TimeSeries& y, std::size_t order, std::size_t ell, const FitConfig& config,
                      OneShotMethod method) {
  detail::check_fit_dims(y, order, ell);
  config.validate();

  FitResult fit;
  fit.algorithm = Algorithm::OneShot;
  fit.order = order;
  fit.scaling = Scaling::zscore(y);
  const StackedData stacks(fit.scaling.apply(y.data()), order);

  // Stage 1: the oblique projection, once.
  const FullVar var = fit_full_var(stacks, config.ridge);
  const Matrix basis = method == OneShotMethod::Autocovariance ? signal_basis_autocovariance(stacks.series(), order, ell)
                                                               : signal_basis_coefficients(var.coeffs, order, ell);
  WeightMatrices w = constrained_weights(basis, var.residual_cov);
  Eigen::FullPivLU<Matrix> lu(w.dlv.transpose() * basis);
  if (!lu.isInvertible()) throw Error(ErrorKind::RankError, "constrained weights are orthogonal to the signal subspace");
  // Rescale P to R^T P = I; span(P) is unchanged.
  fit.params.loadings = basis * lu.inverse();
  fit.weights = std::move(w);
  fit.residual_cov = var.residual_cov;

  // Stage 2: latent dynamics, once.
  const DlvStacks dlvs = extract_dlvs(stacks, fit.weights.dlv);
  const DynamicsEstimate dyn = update_dynamics(dlvs, config.ridge);
  fit.params.var_coeffs = dyn.coeffs();
  fit.params.innovation_cov = dyn.innovation_cov;
  fit.dlv_objective_trace.push_back(
      detail::objective_or_nan([&] { return dlv_objective(dlvs, dyn.stacked, dyn.innovation_cov); }));
  fit.iterations = 1;
  fit.converged = true;
  detail::complete_static_part(fit);
  return fit;
}

FitResult fit_algorithm(Algorithm algo, const TimeSeries& y, std::size_t order, std::size_t ell, const FitConfig& config) {
  switch (algo) {
    case Algorithm::PredVar: return fit_predvar(y, order, ell, config);
    case Algorithm::OneShot: return fit_oneshot(y, order, ell, config);
    case Algorithm::Orth: return fit_orth(y, order, ell, config);
  }
  throw Error(ErrorKind::ConfigError, "unknown algorithm");
}

}  // namespace predvar
