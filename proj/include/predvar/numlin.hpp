#pragma once

// Dense linear-algebra kernels shared by the estimator, the baselines and the
// evaluation code. Everything here is a pure function of its arguments.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "predvar/error.hpp"

namespace predvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Time-ordered block of d-dimensional samples, one sample per row.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(Matrix data);

  const Matrix& data() const noexcept { return data_; }
  std::size_t length() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(data_.cols()); }

  /// Rows [first, first + count).
  TimeSeries slice(std::size_t first, std::size_t count) const;

 private:
  Matrix data_;
};

/// Full SVD with singular values in ascending order.
///
/// `singular_values` has one entry per row of the input. For a tall input the
/// leading rows - cols entries are zero padding and the matching leading
/// columns of `left` span the left null space. The k = min(rows, cols) genuine
/// singular triplets occupy the trailing k columns of both `left` and `right`.
struct SvdResult {
  Matrix left;
  Vector singular_values;
  Matrix right;

  /// U * diag(S) * V^T using the pairing described above.
  Matrix reconstruct() const;
};

SvdResult svd_full(const Matrix& a);

/// The k left singular vectors of `a` with the smallest singular values.
/// When `a` has fewer than k zero singular values the least-excited
/// directions are returned instead of failing.
Matrix left_null_basis(const Matrix& a, std::size_t k);

/// (1/N) sum (x_k - mean)(x_k - mean)^T.
Matrix sample_covariance(const TimeSeries& series);

/// Principal angles between span(a) and span(b) in degrees, ascending.
std::vector<double> canonical_angles(const Matrix& a, const Matrix& b);

/// Moore-Penrose inverse with singular-value cutoff 1e-12 * sigma_max.
Matrix pseudo_inverse(const Matrix& p);

double frobenius_distance(const Matrix& a, const Matrix& b);

// Helpers used across modules.

bool all_finite(const Matrix& a) noexcept;

/// Orthonormal basis (thin QR) of the column space of a full-column-rank matrix.
Matrix orthonormal_basis(const Matrix& a);

/// Solve gram * X = rhs for symmetric positive (semi)definite gram. Throws
/// SingularGram when gram is numerically singular.
Matrix spd_solve(const Matrix& gram, const Matrix& rhs);

/// Symmetric PSD square root; negative eigenvalues are clamped at zero.
Matrix psd_sqrt(const Matrix& sym);

/// Smallest eigenvalue of the symmetrized matrix.
double min_eigenvalue(const Matrix& sym);

Matrix symmetrize(const Matrix& a);

}  // namespace predvar
