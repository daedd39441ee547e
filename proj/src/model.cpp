#include "predvar/model.hpp"

#include <cmath>
#include <random>
#include <string>

namespace predvar {

namespace {

constexpr double kLoadingsCond = 1e-10;
constexpr double kDualTol = 1e-8;

void require_psd(const Matrix& cov, const char* name) {
  if (cov.rows() != cov.cols()) throw Error(ErrorKind::DimensionError, std::string(name) + " is not square");
  if (!all_finite(cov)) throw Error(ErrorKind::InvalidCovariance, std::string(name) + " has non-finite entries");
  if ((cov - cov.transpose()).norm() > 1e-12 * std::max(1.0, cov.norm())) {
    throw Error(ErrorKind::InvalidCovariance, std::string(name) + " is not symmetric");
  }
  if (cov.size() > 0 && min_eigenvalue(cov) < -1e-10 * std::max(1.0, cov.trace())) {
    throw Error(ErrorKind::InvalidCovariance, std::string(name) + " is not positive semidefinite");
  }
}

bool nonsingular(const Matrix& square, double rel_tol) {
  const Vector s = Eigen::JacobiSVD<Matrix>(square).singularValues();
  return s.size() > 0 && s(s.size() - 1) > rel_tol * s(0);
}

Matrix gaussian_block(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

}  // namespace

void PredVarParams::validate() const {
  const auto p_ = loadings.rows();
  const auto l = loadings.cols();
  if (p_ < 2 || l < 1 || l >= p_) throw Error(ErrorKind::DimensionError, "loadings must be p x ell with 1 <= ell < p");
  if (static_loadings.rows() != p_ || static_loadings.cols() != p_ - l) {
    throw Error(ErrorKind::DimensionError, "static loadings must be p x (p - ell)");
  }
  for (const auto& b : var_coeffs) {
    if (b.rows() != l || b.cols() != l) throw Error(ErrorKind::DimensionError, "VAR coefficients must be ell x ell");
  }
  if (innovation_cov.size() > 0 && innovation_cov.rows() != l) {
    throw Error(ErrorKind::DimensionError, "innovation covariance must be ell x ell");
  }
  if (static_noise_cov.rows() != p_ - l) throw Error(ErrorKind::DimensionError, "static noise covariance must be (p - ell) square");
  Matrix stacked(p_, p_);
  stacked << loadings, static_loadings;
  if (!all_finite(stacked) || !nonsingular(stacked, kLoadingsCond)) {
    throw Error(ErrorKind::SingularLoadings, "[P Pbar] is numerically singular");
  }
  require_psd(innovation_cov, "innovation covariance");
  require_psd(static_noise_cov, "static noise covariance");
}

WeightMatrices weights_from_loadings(const Matrix& loadings, const Matrix& static_loadings) {
  const auto p = loadings.rows();
  if (static_loadings.rows() != p || loadings.cols() + static_loadings.cols() != p) {
    throw Error(ErrorKind::DimensionError, "[P Pbar] must be square");
  }
  Matrix stacked(p, p);
  stacked << loadings, static_loadings;
  if (!all_finite(stacked) || !nonsingular(stacked, kLoadingsCond)) {
    throw Error(ErrorKind::SingularLoadings, "[P Pbar] is numerically singular");
  }
  const Matrix dual = stacked.fullPivLu().inverse().transpose();
  return {dual.leftCols(loadings.cols()), dual.rightCols(static_loadings.cols())};
}

WeightMatrices weights_from_loadings(const PredVarParams& params) {
  return weights_from_loadings(params.loadings, params.static_loadings);
}

Matrix oblique_projector(const Matrix& loadings, const Matrix& weights) {
  if (loadings.rows() != weights.rows() || loadings.cols() != weights.cols()) {
    throw Error(ErrorKind::DimensionError, "P and R must have equal shapes");
  }
  const Matrix gram = weights.transpose() * loadings;
  if ((gram - Matrix::Identity(gram.rows(), gram.cols())).norm() > kDualTol) {
    throw Error(ErrorKind::NotDualPair, "R^T P deviates from identity");
  }
  return loadings * weights.transpose();
}

Matrix companion_matrix(std::span<const Matrix> var_coeffs) {
  if (var_coeffs.empty()) throw Error(ErrorKind::OrderError, "VAR order must be at least 1");
  const auto l = var_coeffs.front().rows();
  const auto s = static_cast<Eigen::Index>(var_coeffs.size());
  Matrix c = Matrix::Zero(s * l, s * l);
  for (Eigen::Index j = 0; j < s; ++j) c.block(0, j * l, l, l) = var_coeffs[static_cast<std::size_t>(j)];
  if (s > 1) c.block(l, 0, (s - 1) * l, (s - 1) * l).setIdentity();
  return c;
}

double spectral_radius(const Matrix& square) {
  return Eigen::EigenSolver<Matrix>(square, false).eigenvalues().cwiseAbs().maxCoeff();
}

SimulatedSeries simulate(const PredVarParams& params, std::size_t n, std::uint64_t seed, std::size_t burn_in) {
  params.validate();
  if (n < 1) throw Error(ErrorKind::InvalidInput, "simulate needs n >= 1");
  if (!params.has_dynamics()) throw Error(ErrorKind::OrderError, "simulation needs VAR coefficients and innovation covariance");
  if (!(spectral_radius(companion_matrix(params.var_coeffs)) < 1.0)) {
    throw Error(ErrorKind::UnstableDynamics, "companion spectral radius >= 1");
  }

  const auto p = static_cast<Eigen::Index>(params.p());
  const auto l = static_cast<Eigen::Index>(params.ell());
  const std::size_t s = params.order();
  const std::size_t total = n + s;
  const Matrix innov_root = psd_sqrt(params.innovation_cov);
  const Matrix noise_root = psd_sqrt(params.static_noise_cov);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto draw = [&](Eigen::Index d) {
    Vector z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
    return z;
  };

  // history[0] is the most recent latent sample
  std::vector<Vector> history(s, Vector::Zero(l));
  Matrix y(static_cast<Eigen::Index>(total), p);
  Matrix v(static_cast<Eigen::Index>(total), l);
  for (std::size_t k = 0; k < burn_in + total; ++k) {
    Vector next = one_step_predict(params.var_coeffs, history) + innov_root * draw(l);
    const Vector noise = noise_root * draw(p - l);
    for (std::size_t j = s - 1; j > 0; --j) history[j] = std::move(history[j - 1]);
    history[0] = next;
    if (k >= burn_in) {
      const auto row = static_cast<Eigen::Index>(k - burn_in);
      v.row(row) = next.transpose();
      y.row(row) = (params.loadings * next + params.static_loadings * noise).transpose();
    }
  }
  return {TimeSeries(std::move(y)), TimeSeries(std::move(v))};
}

Vector one_step_predict(std::span<const Matrix> var_coeffs, std::span<const Vector> history) {
  if (history.size() != var_coeffs.size()) {
    throw Error(ErrorKind::DimensionError, "history length " + std::to_string(history.size()) + " != VAR order " +
                                               std::to_string(var_coeffs.size()));
  }
  if (var_coeffs.empty()) throw Error(ErrorKind::OrderError, "VAR order must be at least 1");
  Vector out = Vector::Zero(var_coeffs.front().rows());
  for (std::size_t j = 0; j < var_coeffs.size(); ++j) {
    if (history[j].size() != var_coeffs[j].cols()) throw Error(ErrorKind::DimensionError, "history sample has wrong dimension");
    out.noalias() += var_coeffs[j] * history[j];
  }
  return out;
}

ReducedRankVar to_reduced_rank_var(const PredVarParams& params) {
  params.validate();
  if (params.innovation_cov.size() == 0) throw Error(ErrorKind::InvalidInput, "innovation covariance is unset");
  const WeightMatrices w = weights_from_loadings(params);
  ReducedRankVar out;
  out.coeffs.reserve(params.order());
  for (const auto& b : params.var_coeffs) out.coeffs.push_back(params.loadings * b * w.dlv.transpose());
  out.residual_cov = symmetrize(params.loadings * params.innovation_cov * params.loadings.transpose() +
                                params.static_loadings * params.static_noise_cov * params.static_loadings.transpose());
  return out;
}

PredVarParams equivalent_transform(const PredVarParams& params, const Matrix& m, const Matrix& m_bar) {
  const auto l = static_cast<Eigen::Index>(params.ell());
  const auto q = static_cast<Eigen::Index>(params.p() - params.ell());
  if (m.rows() != l || m.cols() != l || m_bar.rows() != q || m_bar.cols() != q) {
    throw Error(ErrorKind::DimensionError, "transform shapes must be ell x ell and (p - ell) x (p - ell)");
  }
  Eigen::FullPivLU<Matrix> lu(m);
  Eigen::FullPivLU<Matrix> lu_bar(m_bar);
  if (!lu.isInvertible() || !lu_bar.isInvertible() || !nonsingular(m, 1e-12) || !nonsingular(m_bar, 1e-12)) {
    throw Error(ErrorKind::SingularTransform, "transform matrix is singular");
  }
  const Matrix m_inv = lu.inverse();
  const Matrix m_bar_inv = lu_bar.inverse();

  PredVarParams out;
  out.loadings = params.loadings * m_inv;
  out.static_loadings = params.static_loadings * m_bar_inv;
  out.var_coeffs.reserve(params.var_coeffs.size());
  for (const auto& b : params.var_coeffs) out.var_coeffs.push_back(m * b * m_inv);
  if (params.innovation_cov.size() > 0) out.innovation_cov = m * params.innovation_cov * m.transpose();
  out.static_noise_cov = m_bar * params.static_noise_cov * m_bar.transpose();
  return out;
}

PredVarParams random_params(std::size_t p, std::size_t ell, std::size_t s, std::uint64_t seed, double max_spectral_radius,
                            double min_modulus_ratio) {
  if (ell < 1 || ell >= p) throw Error(ErrorKind::ConfigError, "need 1 <= ell < p");
  if (s < 1) throw Error(ErrorKind::OrderError, "VAR order must be at least 1");
  if (!(max_spectral_radius > 0.0 && max_spectral_radius < 1.0) || !(min_modulus_ratio >= 0.0 && min_modulus_ratio < 1.0)) {
    throw Error(ErrorKind::ConfigError, "need 0 < max_spectral_radius < 1 and 0 <= min_modulus_ratio < 1");
  }
  std::mt19937_64 rng(seed);
  const auto pi = static_cast<Eigen::Index>(p);
  const auto l = static_cast<Eigen::Index>(ell);

  PredVarParams out;
  for (;;) {
    out.loadings = gaussian_block(rng, pi, l);
    out.static_loadings = gaussian_block(rng, pi, pi - l);
    Matrix stacked(pi, pi);
    stacked << out.loadings, out.static_loadings;
    if (nonsingular(stacked, 0.15)) break;
  }

  std::uniform_real_distribution<double> unit(0.7, 1.0);
  for (;;) {
    out.var_coeffs.clear();
    for (std::size_t j = 0; j < s; ++j) out.var_coeffs.push_back(gaussian_block(rng, l, l) / std::sqrt(double(ell) * double(j + 1)));
    const Vector moduli = Eigen::EigenSolver<Matrix>(companion_matrix(out.var_coeffs), false).eigenvalues().cwiseAbs();
    const double rho = moduli.maxCoeff();
    if (rho < 1e-3 || moduli.minCoeff() < min_modulus_ratio * rho) continue;
    // Scaling B_j by c^j scales every companion eigenvalue by c.
    const double c = unit(rng) * max_spectral_radius / rho;
    double power = 1.0;
    for (auto& b : out.var_coeffs) {
      power *= c;
      b *= power;
    }
    break;
  }

  const Matrix a = gaussian_block(rng, l, l);
  out.innovation_cov = symmetrize(a * a.transpose() / double(ell) + 0.2 * Matrix::Identity(l, l));
  const Matrix abar = gaussian_block(rng, pi - l, pi - l);
  out.static_noise_cov = symmetrize(abar * abar.transpose() / double(p - ell) + 0.2 * Matrix::Identity(pi - l, pi - l));
  return out;
}

}  // namespace predvar
