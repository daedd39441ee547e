#include "predvar/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace predvar {

namespace {

constexpr double kRankTol = 1e-12;

double to_degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

void require_finite(const Matrix& a, const char* what) {
  if (!all_finite(a)) throw Error(ErrorKind::InvalidInput, std::string(what) + " has non-finite entries");
}

}  // namespace

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::RankError: return "RankError";
    case ErrorKind::SingularLoadings: return "SingularLoadings";
    case ErrorKind::NotDualPair: return "NotDualPair";
    case ErrorKind::UnstableDynamics: return "UnstableDynamics";
    case ErrorKind::InvalidCovariance: return "InvalidCovariance";
    case ErrorKind::SingularTransform: return "SingularTransform";
    case ErrorKind::OrderError: return "OrderError";
    case ErrorKind::SingularGram: return "SingularGram";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IntegrationError: return "IntegrationError";
    case ErrorKind::IndexError: return "IndexError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::FormatError: return "FormatError";
  }
  return "Unknown";
}

TimeSeries::TimeSeries(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1) throw Error(ErrorKind::InvalidInput, "time series must be non-empty");
  require_finite(data_, "time series");
}

TimeSeries TimeSeries::slice(std::size_t first, std::size_t count) const {
  if (first + count > length() || count == 0) {
    throw Error(ErrorKind::IndexError, "slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                                           ") outside series of length " + std::to_string(length()));
  }
  return TimeSeries(data_.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count)));
}

bool all_finite(const Matrix& a) noexcept { return a.allFinite(); }

SvdResult svd_full(const Matrix& a) {
  require_finite(a, "svd input");
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  const Eigen::Index k = std::min(rows, cols);

  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  const Vector& d = svd.singularValues();  // descending, length k

  SvdResult out;
  out.left.resize(rows, rows);
  out.right.resize(cols, cols);
  out.singular_values = Vector::Zero(rows);

  // Padding columns first, then the genuine triplets in ascending order.
  const Eigen::Index left_pad = rows - k;
  for (Eigen::Index j = 0; j < left_pad; ++j) out.left.col(j) = u.col(k + j);
  const Eigen::Index right_pad = cols - k;
  for (Eigen::Index j = 0; j < right_pad; ++j) out.right.col(j) = v.col(k + j);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index src = k - 1 - i;
    out.left.col(left_pad + i) = u.col(src);
    out.right.col(right_pad + i) = v.col(src);
    out.singular_values(left_pad + i) = d(src);
  }
  return out;
}

Matrix SvdResult::reconstruct() const {
  const Eigen::Index rows = left.rows();
  const Eigen::Index cols = right.rows();
  const Eigen::Index k = std::min(rows, cols);
  Matrix out = Matrix::Zero(rows, cols);
  for (Eigen::Index i = 0; i < k; ++i) {
    out += singular_values(rows - k + i) * left.col(rows - k + i) * right.col(cols - k + i).transpose();
  }
  return out;
}

Matrix left_null_basis(const Matrix& a, std::size_t k) {
  if (k > static_cast<std::size_t>(a.rows())) {
    throw Error(ErrorKind::DimensionError,
                "requested " + std::to_string(k) + " null directions from a matrix with " + std::to_string(a.rows()) + " rows");
  }
  if (k == 0) return Matrix(a.rows(), 0);
  return svd_full(a).left.leftCols(static_cast<Eigen::Index>(k));
}

Matrix sample_covariance(const TimeSeries& series) {
  const auto n = series.length();
  if (n < 2) throw Error(ErrorKind::InsufficientData, "sample covariance needs at least 2 samples");
  const Matrix& x = series.data();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - mean;
  return symmetrize(centered.transpose() * centered / static_cast<double>(n));
}

Matrix orthonormal_basis(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

namespace {

void require_full_column_rank(const Matrix& a, const char* name) {
  if (a.cols() == 0 || a.rows() < a.cols()) {
    throw Error(ErrorKind::RankError, std::string(name) + " cannot have full column rank");
  }
  const Vector s = Eigen::JacobiSVD<Matrix>(a).singularValues();
  if (!(s(s.size() - 1) > kRankTol * s(0))) {
    throw Error(ErrorKind::RankError, std::string(name) + " is rank deficient");
  }
}

}  // namespace

std::vector<double> canonical_angles(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw Error(ErrorKind::DimensionError, "canonical_angles: row counts differ");
  require_finite(a, "canonical_angles input");
  require_finite(b, "canonical_angles input");
  require_full_column_rank(a, "first basis");
  require_full_column_rank(b, "second basis");

  // Small angles come from the sines of the component of the smaller basis
  // outside the larger one.
  const bool a_small = a.cols() <= b.cols();
  const Matrix q_small = orthonormal_basis(a_small ? a : b);
  const Matrix q_large = orthonormal_basis(a_small ? b : a);
  const Matrix cross = q_large.transpose() * q_small;
  const Vector cosines = Eigen::JacobiSVD<Matrix>(cross).singularValues();  // descending
  const Vector sines_desc = Eigen::JacobiSVD<Matrix>(q_small - q_large * cross).singularValues();

  const Eigen::Index m = q_small.cols();
  std::vector<double> angles(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double s = std::clamp(sines_desc(m - 1 - i), 0.0, 1.0);
    angles[static_cast<std::size_t>(i)] = to_degrees(c * c >= 0.5 ? std::asin(s) : std::acos(c));
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

Matrix pseudo_inverse(const Matrix& p) {
  require_finite(p, "pseudo_inverse input");
  Eigen::JacobiSVD<Matrix> svd(p, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Matrix out = Matrix::Zero(p.cols(), p.rows());
  if (s.size() == 0 || s(0) == 0.0) return out;
  const double cutoff = kRankTol * s(0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) out += svd.matrixV().col(i) * (svd.matrixU().col(i).transpose() / s(i));
  }
  return out;
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionError, "frobenius_distance: shapes differ");
  }
  return (a - b).norm();
}

Matrix spd_solve(const Matrix& gram, const Matrix& rhs) {
  if (gram.rows() != gram.cols() || gram.rows() != rhs.rows()) {
    throw Error(ErrorKind::DimensionError, "spd_solve: incompatible shapes");
  }
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14)) {
    throw Error(ErrorKind::SingularGram, "Gram matrix is numerically singular");
  }
  return ldlt.solve(rhs);
}

Matrix psd_sqrt(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(sym));
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double min_eigenvalue(const Matrix& sym) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(sym), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace predvar
