#include "predvar/estimate.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "estimate_internal.hpp"

namespace predvar {

namespace {

constexpr double kSymTol = 1e-10;

Matrix gram_of(const Matrix& resid) { return resid.transpose() * resid; }

}  // namespace

// ---- small types -------------------------------------------------------------

StackedData::StackedData(Matrix series, std::size_t order) : series_(std::move(series)), order_(order), samples_(0) {
  if (order_ < 1) throw Error(ErrorKind::OrderError, "VAR order must be at least 1");
  const auto length = static_cast<std::size_t>(series_.rows());
  if (length < order_ + 2) {
    throw Error(ErrorKind::InsufficientData,
                "series of length " + std::to_string(length) + " too short for order " + std::to_string(order_));
  }
  samples_ = length - order_;
}

std::vector<Matrix> unstack_coeffs(const Matrix& stacked, std::size_t order) {
  if (order == 0 || stacked.rows() % static_cast<Eigen::Index>(order) != 0) {
    throw Error(ErrorKind::DimensionError, "stacked coefficients do not split into the requested order");
  }
  const auto l = stacked.rows() / static_cast<Eigen::Index>(order);
  std::vector<Matrix> out;
  out.reserve(order);
  for (std::size_t j = 0; j < order; ++j) out.push_back(stacked.middleRows(static_cast<Eigen::Index>(j) * l, l).transpose());
  return out;
}

Matrix stack_coeffs(const std::vector<Matrix>& coeffs) {
  if (coeffs.empty()) throw Error(ErrorKind::OrderError, "VAR order must be at least 1");
  const auto l = coeffs.front().rows();
  Matrix out(l * static_cast<Eigen::Index>(coeffs.size()), l);
  for (std::size_t j = 0; j < coeffs.size(); ++j) out.middleRows(static_cast<Eigen::Index>(j) * l, l) = coeffs[j].transpose();
  return out;
}

std::vector<Matrix> DynamicsEstimate::coeffs() const {
  return unstack_coeffs(stacked, static_cast<std::size_t>(stacked.rows() / std::max<Eigen::Index>(1, stacked.cols())));
}

void FitConfig::validate() const {
  if (!(outer_tol > 0.0) || !(inner_tol > 0.0)) throw Error(ErrorKind::ConfigError, "tolerances must be positive");
  if (outer_max_iter < 1 || inner_max_iter < 1) throw Error(ErrorKind::ConfigError, "iteration caps must be >= 1");
  if (!(ridge >= 0.0)) throw Error(ErrorKind::ConfigError, "ridge must be non-negative");
}

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::PredVar: return "predvar";
    case Algorithm::OneShot: return "oneshot";
    case Algorithm::Orth: return "orth";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "predvar") return Algorithm::PredVar;
  if (name == "oneshot" || name == "os") return Algorithm::OneShot;
  if (name == "orth") return Algorithm::Orth;
  throw Error(ErrorKind::ConfigError, "unknown algorithm '" + name + "'");
}

Scaling Scaling::identity(std::size_t p) {
  const auto n = static_cast<Eigen::Index>(p);
  return {Vector::Zero(n), Vector::Ones(n)};
}

Scaling Scaling::zscore(const TimeSeries& y) {
  const Matrix& x = y.data();
  Scaling out;
  out.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - out.mean.transpose();
  out.scale = (centered.colwise().squaredNorm() / static_cast<double>(x.rows())).cwiseSqrt().transpose();
  for (Eigen::Index i = 0; i < out.scale.size(); ++i) {
    if (!(out.scale(i) > 0.0)) throw Error(ErrorKind::RankError, "channel " + std::to_string(i) + " is constant");
  }
  return out;
}

Matrix Scaling::apply(const Matrix& rows) const {
  if (rows.cols() != mean.size()) throw Error(ErrorKind::DimensionError, "scaling dimension mismatch");
  return (rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Matrix FitResult::loadings_original() const { return scaling.scale.asDiagonal() * params.loadings; }

Matrix FitResult::weights_original() const { return scaling.scale.cwiseInverse().asDiagonal() * weights.dlv; }

Matrix FitResult::projector_original() const { return loadings_original() * weights_original().transpose(); }

Matrix FitResult::innovation_cov_signal_original() const {
  const Matrix p = loadings_original();
  return symmetrize(p * params.innovation_cov * p.transpose());
}

Matrix FitResult::latent_of(const Matrix& y_rows) const { return scaling.apply(y_rows) * weights.dlv; }

double FitResult::identity_residual() const {
  return (weights.dlv.transpose() * params.loadings - Matrix::Identity(params.loadings.cols(), params.loadings.cols())).norm();
}

double FitResult::covariance_residual() const {
  const Matrix diff = weights.dlv.transpose() * residual_cov * weights.dlv - params.innovation_cov;
  const double scale = params.innovation_cov.norm();
  return scale > 0.0 ? diff.norm() / scale : diff.norm();
}

void validate_fit(const FitResult& fit) {
  const auto p = static_cast<Eigen::Index>(fit.p());
  const auto l = static_cast<Eigen::Index>(fit.ell());
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::InvalidInput, "fit result: " + what);
  };
  require(l >= 1 && l < p, "latent dimension out of range");
  require(fit.params.static_loadings.rows() == p && fit.params.static_loadings.cols() == p - l, "static loadings shape");
  require(fit.weights.dlv.rows() == p && fit.weights.dlv.cols() == l, "weights shape");
  require(fit.weights.static_.rows() == p && fit.weights.static_.cols() == p - l, "static weights shape");
  require(fit.residual_cov.rows() == p && fit.residual_cov.cols() == p, "residual covariance shape");
  require(fit.params.var_coeffs.size() == fit.order, "VAR order");
  require(fit.scaling.mean.size() == p && fit.scaling.scale.size() == p, "scaling shape");
  auto sym_psd = [&](const Matrix& c, const char* name) {
    require((c - c.transpose()).norm() <= kSymTol * std::max(1.0, c.norm()), std::string(name) + " not symmetric");
    require(c.size() == 0 || min_eigenvalue(c) >= -1e-10 * std::max(1.0, c.trace()), std::string(name) + " not PSD");
  };
  sym_psd(fit.residual_cov, "residual covariance");
  sym_psd(fit.params.innovation_cov, "innovation covariance");
  sym_psd(fit.params.static_noise_cov, "static noise covariance");
  if (fit.algorithm != Algorithm::Orth) {
    require((fit.weights.dlv.transpose() * fit.weights.dlv - Matrix::Identity(l, l)).norm() <= kSymTol,
            "weights are not orthonormal");
  }
}

// ---- building blocks -----------------------------------------------------------

StackedData build_stacks(const TimeSeries& y, std::size_t order) { return StackedData(y.data(), order); }

Matrix init_weights(const StackedData& stacks, std::size_t ell) {
  const auto p = stacks.dim();
  if (ell < 1 || ell > p) throw Error(ErrorKind::DimensionError, "latent dimension out of range");
  const Matrix target = stacks.target();
  const Matrix cov = symmetrize(target.transpose() * target / static_cast<double>(stacks.samples()));
  const SvdResult svd = svd_full(cov);
  const Vector& s = svd.singular_values;  // ascending
  const auto n = s.size();
  const auto l = static_cast<Eigen::Index>(ell);
  if (!(s(n - l) > 1e-12 * s(n - 1))) throw Error(ErrorKind::RankError, "measurement covariance is degenerate");
  // Largest ell directions, strongest first.
  return svd.left.rightCols(l).rowwise().reverse();
}

DlvStacks extract_dlvs(const StackedData& stacks, const Matrix& weights) {
  if (weights.rows() != static_cast<Eigen::Index>(stacks.dim())) {
    throw Error(ErrorKind::DimensionError, "weights have " + std::to_string(weights.rows()) + " rows, data has " +
                                               std::to_string(stacks.dim()) + " channels");
  }
  DlvStacks out;
  out.order = stacks.order();
  out.samples = stacks.samples();
  out.latent = stacks.series() * weights;
  const auto l = weights.cols();
  const auto n = static_cast<Eigen::Index>(out.samples);
  out.lagged.resize(n, l * static_cast<Eigen::Index>(out.order));
  for (std::size_t j = 1; j <= out.order; ++j) {
    out.lagged.middleCols(static_cast<Eigen::Index>(j - 1) * l, l) = out.v(out.order - j);
  }
  return out;
}

DynamicsEstimate update_dynamics(const DlvStacks& dlvs, double ridge) {
  const auto n = static_cast<double>(dlvs.samples);
  Matrix gram = dlvs.lagged.transpose() * dlvs.lagged;
  if (ridge > 0.0) gram.diagonal().array() += ridge;
  const Matrix target = dlvs.target();
  DynamicsEstimate out;
  out.stacked = spd_solve(gram, dlvs.lagged.transpose() * target);
  const Matrix resid = target - dlvs.lagged * out.stacked;
  out.innovation_cov = symmetrize(resid.transpose() * resid / n);
  return out;
}

double dlv_objective(const DlvStacks& dlvs, const Matrix& stacked_coeffs, const Matrix& innovation_cov) {
  if (stacked_coeffs.rows() != dlvs.lagged.cols() || innovation_cov.rows() != dlvs.latent.cols()) {
    throw Error(ErrorKind::DimensionError, "dlv_objective: shape mismatch");
  }
  const Matrix resid = dlvs.target() - dlvs.lagged * stacked_coeffs;
  return detail::gaussian_objective(innovation_cov, gram_of(resid), dlvs.samples);
}

LoadingsEstimate update_loadings(const StackedData& stacks, const DlvStacks& dlvs, const Matrix& stacked_coeffs,
                                 double ridge) {
  if (stacked_coeffs.rows() != dlvs.lagged.cols()) throw Error(ErrorKind::DimensionError, "update_loadings: shape mismatch");
  const Matrix predicted = dlvs.lagged * stacked_coeffs;  // N x ell
  Matrix gram = predicted.transpose() * predicted;
  if (ridge > 0.0) gram.diagonal().array() += ridge;
  const Matrix target = stacks.target();
  LoadingsEstimate out;
  out.loadings = spd_solve(gram, predicted.transpose() * target).transpose();
  const Matrix resid = target - predicted * out.loadings.transpose();
  out.residual_cov = symmetrize(resid.transpose() * resid / static_cast<double>(stacks.samples()));
  return out;
}

double proj_objective(const StackedData& stacks, const DlvStacks& dlvs, const Matrix& stacked_coeffs,
                      const Matrix& loadings, const Matrix& residual_cov) {
  if (loadings.rows() != static_cast<Eigen::Index>(stacks.dim()) || residual_cov.rows() != loadings.rows()) {
    throw Error(ErrorKind::DimensionError, "proj_objective: shape mismatch");
  }
  const Matrix resid = stacks.target() - (dlvs.lagged * stacked_coeffs) * loadings.transpose();
  return detail::gaussian_objective(residual_cov, gram_of(resid), stacks.samples());
}

WeightMatrices constrained_weights(const Matrix& loadings, const Matrix& residual_cov) {
  const auto p = loadings.rows();
  const auto l = loadings.cols();
  if (residual_cov.rows() != p || residual_cov.cols() != p) throw Error(ErrorKind::DimensionError, "Sigma_e must be p x p");
  if (l < 1 || l >= p) throw Error(ErrorKind::DimensionError, "loadings must be p x ell with ell < p");
  const SvdResult svd = svd_full(loadings);
  const Vector& s = svd.singular_values;
  if (!(s(p - l) > 1e-12 * s(p - 1))) throw Error(ErrorKind::RankError, "loadings are rank deficient");

  WeightMatrices out;
  out.static_ = svd.left.leftCols(p - l);
  const Matrix mixed = residual_cov * out.static_;
  if (mixed.norm() <= 1e-12 * residual_cov.norm() || residual_cov.norm() == 0.0) {
    // Sigma_e vanishes on the static directions: R is the orthogonal
    // complement of Rbar.
    out.dlv = svd.left.rightCols(l);
  } else {
    out.dlv = left_null_basis(mixed, static_cast<std::size_t>(l));
  }
  return out;
}

ObliqueFit fit_oblique(const StackedData& stacks, const Matrix& stacked_coeffs, const Matrix& initial_weights,
                       const FitConfig& config) {
  return detail::projection_loop(LaggedMoments(stacks), stacked_coeffs, initial_weights, config,
                                 detail::WeightRule::Constrained);
}

namespace detail {

void check_fit_dims(const TimeSeries& y, std::size_t order, std::size_t ell) {
  const auto p = y.dim();
  if (order < 1) throw Error(ErrorKind::ConfigError, "order must be >= 1");
  if (ell < 1 || ell >= p) {
    throw Error(ErrorKind::ConfigError, "latent dimension " + std::to_string(ell) + " must satisfy 1 <= ell < p = " +
                                            std::to_string(p));
  }
  const std::size_t needed = order + std::max(order * ell, p) + 1;
  if (y.length() < needed) {
    throw Error(ErrorKind::ConfigError, "series of length " + std::to_string(y.length()) + " shorter than required " +
                                            std::to_string(needed));
  }
}

double relative_change(const Matrix& current, const Matrix& previous) {
  const double base = previous.norm();
  const double diff = (current - previous).norm();
  return base > 0.0 ? diff / base : diff;
}

Matrix rebase_coeffs(const Matrix& stacked_coeffs, const Matrix& m, std::size_t order) {
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularTransform, "latent basis change is singular");
  const Matrix m_inv = lu.inverse();
  std::vector<Matrix> coeffs = unstack_coeffs(stacked_coeffs, order);
  for (auto& b : coeffs) b = m * b * m_inv;
  return stack_coeffs(coeffs);
}

double gaussian_objective(const Matrix& cov, const Matrix& residual_gram, std::size_t samples) {
  Eigen::LLT<Matrix> llt(symmetrize(cov));
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularCovariance, "covariance is not positive definite");
  const Vector diag = llt.matrixL().toDenseMatrix().diagonal();
  if (!(diag.minCoeff() > 1e-150) || !(diag.minCoeff() > 1e-8 * diag.maxCoeff())) {
    throw Error(ErrorKind::SingularCovariance, "covariance is numerically singular");
  }
  const double log_det = 2.0 * diag.array().log().sum();
  // trace(C^{-1} G) with C = L L^T
  const Matrix half = llt.matrixL().solve(residual_gram);
  const Matrix whole = llt.matrixL().solve(half.transpose());
  return static_cast<double>(samples) * log_det + whole.trace();
}

double objective_or_nan(const std::function<double()>& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SingularCovariance) return std::numeric_limits<double>::quiet_NaN();
    throw;
  }
}

ObliqueFit projection_loop(const LaggedMoments& moments, const Matrix& stacked_coeffs, const Matrix& initial_weights,
                           const FitConfig& config, WeightRule rule) {
  const std::size_t order = moments.order();
  ObliqueFit out;
  out.stacked_coeffs = stacked_coeffs;
  Matrix weights = initial_weights;
  Matrix previous;
  for (std::size_t it = 1; it <= config.inner_max_iter; ++it) {
    LoadingsEstimate le = update_loadings(moments, weights, out.stacked_coeffs, config.ridge);
    out.proj_objective_trace.push_back(objective_or_nan(
        [&] { return proj_objective(moments, weights, out.stacked_coeffs, le.loadings, le.residual_cov); }));

    WeightMatrices w;
    if (rule == WeightRule::Constrained) {
      w = constrained_weights(le.loadings, le.residual_cov);
      if (config.inner_basis == InnerBasis::Procrustes) {
        Eigen::JacobiSVD<Matrix> polar(w.dlv.transpose() * weights, Eigen::ComputeFullU | Eigen::ComputeFullV);
        w.dlv = w.dlv * (polar.matrixU() * polar.matrixV().transpose());
      }
    } else {
      // Natural filter R = P (P^T P)^{-1} in the basis of the orthonormal Q of
      // P = Q T; the frozen dynamics are rebased with M = T.
      Eigen::HouseholderQR<Matrix> qr(le.loadings);
      const auto l = le.loadings.cols();
      const Matrix q = qr.householderQ() * Matrix::Identity(le.loadings.rows(), l);
      const Matrix t = q.transpose() * le.loadings;
      out.stacked_coeffs = rebase_coeffs(out.stacked_coeffs, t, order);
      le.loadings = q;
      w.dlv = q;
      w.static_ = left_null_basis(q, static_cast<std::size_t>(le.loadings.rows() - l));
    }

    weights = w.dlv;
    const Matrix projector = le.loadings * weights.transpose();
    out.loadings = std::move(le.loadings);
    out.residual_cov = std::move(le.residual_cov);
    out.weights = std::move(w);
    out.iterations = it;
    if (previous.size() > 0 && relative_change(projector, previous) < config.inner_tol) {
      out.converged = true;
      break;
    }
    previous = projector;
  }
  return out;
}

void complete_static_part(FitResult& fit) {
  const auto p = static_cast<std::size_t>(fit.weights.dlv.rows());
  const auto l = static_cast<std::size_t>(fit.weights.dlv.cols());
  const Matrix complement = left_null_basis(fit.weights.dlv, p - l);  // spans null(R^T)
  const Matrix coupling = fit.weights.static_.transpose() * complement;
  Eigen::FullPivLU<Matrix> lu(coupling);
  if (!lu.isInvertible()) throw Error(ErrorKind::RankError, "static weights do not couple to null(R^T)");
  fit.params.static_loadings = complement * lu.inverse();
  fit.params.static_noise_cov = symmetrize(fit.weights.static_.transpose() * fit.residual_cov * fit.weights.static_);
}

FitResult alternate(const TimeSeries& y, std::size_t order, std::size_t ell, const FitConfig& config, WeightRule rule) {
  check_fit_dims(y, order, ell);
  config.validate();

  FitResult fit;
  fit.algorithm = rule == WeightRule::Constrained ? Algorithm::PredVar : Algorithm::Orth;
  fit.order = order;
  fit.scaling = Scaling::zscore(y);
  const StackedData stacks(fit.scaling.apply(y.data()), order);
  const LaggedMoments moments(stacks);

  Matrix weights = init_weights(stacks, ell);
  Matrix previous;
  ObliqueFit inner;
  for (std::size_t it = 1; it <= config.outer_max_iter; ++it) {
    const DynamicsEstimate dyn = update_dynamics(moments, weights, config.ridge);
    fit.dlv_objective_trace.push_back(
        objective_or_nan([&] { return dlv_objective(moments, weights, dyn.stacked, dyn.innovation_cov); }));

    inner = projection_loop(moments, dyn.stacked, weights, config, rule);
    fit.proj_objective_trace.push_back(inner.proj_objective_trace.back());
    weights = inner.weights.dlv;
    fit.iterations = it;

    const Matrix projector = inner.loadings * weights.transpose();
    if (previous.size() > 0 && relative_change(projector, previous) < config.outer_tol) {
      fit.converged = true;
      break;
    }
    previous = projector;
  }

  // Dynamics refreshed for the final weights.
  const DynamicsEstimate dyn = update_dynamics(moments, weights, config.ridge);
  fit.params.loadings = inner.loadings;
  fit.params.var_coeffs = dyn.coeffs();
  fit.params.innovation_cov = dyn.innovation_cov;
  fit.weights = inner.weights;
  fit.residual_cov = inner.residual_cov;
  complete_static_part(fit);
  return fit;
}

}  // namespace detail

FitResult fit_predvar(const TimeSeries& y, std::size_t order, std::size_t ell, const FitConfig& config) {
  return detail::alternate(y, order, ell, config, detail::WeightRule::Constrained);
}

}  // namespace predvar
