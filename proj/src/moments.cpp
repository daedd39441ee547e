#include <algorithm>
#include <vector>

#include "estimate_internal.hpp"

namespace predvar {

namespace {

constexpr Eigen::Index kChunkRows = 512;

// Rows first..first+count of Z = [Y_0 ... Y_s].
Matrix lag_rows(const StackedData& stacks, Eigen::Index first, Eigen::Index count) {
  const auto p = static_cast<Eigen::Index>(stacks.dim());
  const auto s = static_cast<Eigen::Index>(stacks.order());
  Matrix z(count, (s + 1) * p);
  for (Eigen::Index i = 0; i <= s; ++i) z.middleCols(i * p, p) = stacks.series().middleRows(first + i, count);
  return z;
}

Matrix moments_serial(const StackedData& stacks) {
  const auto p = static_cast<Eigen::Index>(stacks.dim());
  const auto s = static_cast<Eigen::Index>(stacks.order());
  const auto n = static_cast<Eigen::Index>(stacks.samples());
  const Matrix& y = stacks.series();
  Matrix out = Matrix::Zero((s + 1) * p, (s + 1) * p);
  Vector z((s + 1) * p);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i <= s; ++i) z.segment(i * p, p) = y.row(k + i).transpose();
    out.noalias() += z * z.transpose();
  }
  return out;
}

Matrix moments_parallel(const StackedData& stacks) {
  const auto n = static_cast<Eigen::Index>(stacks.samples());
  const auto width = static_cast<Eigen::Index>((stacks.order() + 1) * stacks.dim());
  const Eigen::Index chunks = (n + kChunkRows - 1) / kChunkRows;
  std::vector<Matrix> partial(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index first = c * kChunkRows;
    const Matrix z = lag_rows(stacks, first, std::min(kChunkRows, n - first));
    partial[static_cast<std::size_t>(c)].noalias() = z.transpose() * z;
  }
  Matrix out = Matrix::Zero(width, width);
  for (const auto& m : partial) out += m;
  return out;
}

// Block-diagonal K with R on each of the s diagonal blocks.
Matrix repeat_diag(const Matrix& r, std::size_t order) {
  const auto p = r.rows();
  const auto l = r.cols();
  Matrix out = Matrix::Zero(p * static_cast<Eigen::Index>(order), l * static_cast<Eigen::Index>(order));
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(order); ++j) out.block(j * p, j * l, p, l) = r;
  return out;
}

void check_weights(const LaggedMoments& m, const Matrix& weights) {
  if (weights.rows() != static_cast<Eigen::Index>(m.dim())) {
    throw Error(ErrorKind::DimensionError, "weights rows do not match the data channels");
  }
}

// (T - X C)^T (T - X C) from X^T X, X^T T and T^T T.
Matrix residual_gram(const Matrix& xx, const Matrix& xt, const Matrix& tt, const Matrix& c) {
  const Matrix cross = xt.transpose() * c;
  return symmetrize(tt - cross - cross.transpose() + c.transpose() * xx * c);
}

}  // namespace

LaggedMoments::LaggedMoments(const StackedData& stacks, Execution exec)
    : order_(stacks.order()), dim_(stacks.dim()), samples_(stacks.samples()) {
  all_ = symmetrize(exec == Execution::Parallel ? moments_parallel(stacks) : moments_serial(stacks));
  const auto p = static_cast<Eigen::Index>(dim_);
  const auto s = static_cast<Eigen::Index>(order_);
  lagged_gram_.resize(s * p, s * p);
  lagged_target_.resize(s * p, p);
  for (Eigen::Index j = 1; j <= s; ++j) {
    for (Eigen::Index k = 1; k <= s; ++k) lagged_gram_.block((j - 1) * p, (k - 1) * p, p, p) = all_.block((s - j) * p, (s - k) * p, p, p);
    lagged_target_.middleRows((j - 1) * p, p) = all_.block((s - j) * p, s * p, p, p);
  }
  target_gram_ = all_.block(s * p, s * p, p, p);
}

Matrix LaggedMoments::block(std::size_t i, std::size_t j) const {
  if (i > order_ || j > order_) throw Error(ErrorKind::IndexError, "lag index exceeds the VAR order");
  const auto p = static_cast<Eigen::Index>(dim_);
  return all_.block(static_cast<Eigen::Index>(i) * p, static_cast<Eigen::Index>(j) * p, p, p);
}

DynamicsEstimate update_dynamics(const LaggedMoments& m, const Matrix& weights, double ridge) {
  check_weights(m, weights);
  const Matrix k = repeat_diag(weights, m.order());
  const Matrix xx = k.transpose() * m.lagged_gram() * k;
  const Matrix xt = k.transpose() * m.lagged_target() * weights;
  const Matrix tt = weights.transpose() * m.target_gram() * weights;
  Matrix gram = xx;
  if (ridge > 0.0) gram.diagonal().array() += ridge;
  DynamicsEstimate out;
  out.stacked = spd_solve(gram, xt);
  out.innovation_cov = residual_gram(xx, xt, tt, out.stacked) / static_cast<double>(m.samples());
  return out;
}

double dlv_objective(const LaggedMoments& m, const Matrix& weights, const Matrix& stacked_coeffs,
                     const Matrix& innovation_cov) {
  check_weights(m, weights);
  const auto l = weights.cols();
  if (stacked_coeffs.rows() != l * static_cast<Eigen::Index>(m.order()) || innovation_cov.rows() != l) {
    throw Error(ErrorKind::DimensionError, "dlv_objective: shape mismatch");
  }
  const Matrix k = repeat_diag(weights, m.order());
  const Matrix gram = residual_gram(k.transpose() * m.lagged_gram() * k, k.transpose() * m.lagged_target() * weights,
                                    weights.transpose() * m.target_gram() * weights, stacked_coeffs);
  return detail::gaussian_objective(innovation_cov, gram, m.samples());
}

LoadingsEstimate update_loadings(const LaggedMoments& m, const Matrix& weights, const Matrix& stacked_coeffs,
                                 double ridge) {
  check_weights(m, weights);
  if (stacked_coeffs.rows() != weights.cols() * static_cast<Eigen::Index>(m.order())) {
    throw Error(ErrorKind::DimensionError, "update_loadings: shape mismatch");
  }
  const Matrix w = repeat_diag(weights, m.order()) * stacked_coeffs;  // predicted latents = U w
  const Matrix xx = w.transpose() * m.lagged_gram() * w;
  const Matrix xt = w.transpose() * m.lagged_target();
  Matrix gram = xx;
  if (ridge > 0.0) gram.diagonal().array() += ridge;
  LoadingsEstimate out;
  const Matrix c = spd_solve(gram, xt);
  out.loadings = c.transpose();
  out.residual_cov = residual_gram(xx, xt, m.target_gram(), c) / static_cast<double>(m.samples());
  return out;
}

double proj_objective(const LaggedMoments& m, const Matrix& weights, const Matrix& stacked_coeffs,
                      const Matrix& loadings, const Matrix& residual_cov) {
  check_weights(m, weights);
  if (loadings.rows() != static_cast<Eigen::Index>(m.dim()) || residual_cov.rows() != loadings.rows() ||
      stacked_coeffs.rows() != weights.cols() * static_cast<Eigen::Index>(m.order())) {
    throw Error(ErrorKind::DimensionError, "proj_objective: shape mismatch");
  }
  const Matrix w = repeat_diag(weights, m.order()) * stacked_coeffs;
  const Matrix gram = residual_gram(w.transpose() * m.lagged_gram() * w, w.transpose() * m.lagged_target(),
                                    m.target_gram(), loadings.transpose());
  return detail::gaussian_objective(residual_cov, gram, m.samples());
}

}  // namespace predvar
