#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace predvar::testing {

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Matrix conditioned(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  const Eigen::Index k = std::min(rows, cols);
  const Matrix u = Eigen::HouseholderQR<Matrix>(gaussian(rng, rows, rows)).householderQ() * Matrix::Identity(rows, k);
  const Matrix v = Eigen::HouseholderQR<Matrix>(gaussian(rng, cols, cols)).householderQ() * Matrix::Identity(cols, k);
  std::uniform_real_distribution<double> unit(lo, hi);
  Vector s(k);
  for (Eigen::Index i = 0; i < k; ++i) s(i) = unit(rng);
  return u * s.asDiagonal() * v.transpose();
}

Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double floor) {
  const Matrix a = gaussian(rng, n, n);
  return a * a.transpose() / static_cast<double>(n) + floor * Matrix::Identity(n, n);
}

OlsFit per_lag_ols(const Matrix& latent, std::size_t order) {
  const auto s = static_cast<Eigen::Index>(order);
  const Eigen::Index l = latent.cols();
  const Eigen::Index n = latent.rows() - s;
  Matrix design(n, s * l);
  Matrix target(n, l);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index now = k + s;
    target.row(k) = latent.row(now);
    for (Eigen::Index j = 1; j <= s; ++j) design.block(k, (j - 1) * l, 1, l) = latent.row(now - j);
  }
  const Matrix stacked = design.colPivHouseholderQr().solve(target);
  OlsFit out;
  for (Eigen::Index j = 0; j < s; ++j) out.coeffs.push_back(stacked.middleRows(j * l, l).transpose());
  Matrix resid = target - design * stacked;
  out.innovation_cov = Matrix::Zero(l, l);
  for (Eigen::Index k = 0; k < n; ++k) out.innovation_cov += resid.row(k).transpose() * resid.row(k);
  out.innovation_cov /= static_cast<double>(n);
  return out;
}

Matrix cca_style_loadings(const StackedData& stacks, const Matrix& weights) {
  const Matrix v = stacks.target() * weights;
  return v.colPivHouseholderQr().solve(Matrix(stacks.target())).transpose();
}

std::vector<double> angles_by_arccos(const Matrix& a, const Matrix& b) {
  const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), b.cols());
  const Vector cosines = Eigen::JacobiSVD<Matrix>(qa.transpose() * qb).singularValues();
  std::vector<double> out;
  for (Eigen::Index i = 0; i < cosines.size(); ++i) {
    out.push_back(std::acos(std::clamp(cosines(i), -1.0, 1.0)) * 180.0 / std::numbers::pi);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Matrix lorenz_reference(const LorenzConfig& c, std::size_t n, std::size_t substeps) {
  auto f = [&](const Eigen::Vector3d& x) {
    return Eigen::Vector3d(c.sigma * (x[1] - x[0]), x[0] * (c.rho - x[2]) - x[1], x[0] * x[1] - c.beta * x[2]);
  };
  const double h = c.dt / static_cast<double>(substeps);
  Eigen::Vector3d x(c.initial_state[0], c.initial_state[1], c.initial_state[2]);
  Matrix out(static_cast<Eigen::Index>(n), 3);
  for (std::size_t k = 0; k < c.discard + n; ++k) {
    for (std::size_t m = 0; m < substeps; ++m) {
      const Eigen::Vector3d a = f(x);
      const Eigen::Vector3d b = f(x + h / 2 * a);
      const Eigen::Vector3d d = f(x + h / 2 * b);
      const Eigen::Vector3d e = f(x + h * d);
      x += h / 6 * (a + 2 * b + 2 * d + e);
    }
    if (k >= c.discard) out.row(static_cast<Eigen::Index>(k - c.discard)) = x.transpose();
  }
  return out;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace predvar::testing
