#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lassolab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised whenever a factorization meets a (numerically) singular matrix.
// Nothing in the library falls back to a pseudo-inverse.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sorted, duplicate-free set of column indices.
class IndexSet {
 public:
  IndexSet() = default;

  /// Throws std::invalid_argument unless `indices` is strictly increasing
  /// and non-negative.
  explicit IndexSet(std::vector<Index> indices);
  IndexSet(std::initializer_list<Index> indices)
      : IndexSet(std::vector<Index>(indices)) {}

  static IndexSet from_unsorted(std::vector<Index> indices);
  static IndexSet range(Index count);
  /// Indices where |v_i| > threshold.
  static IndexSet nonzeros(const Vec& v, double threshold = 0.0);

  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  Index operator[](std::size_t k) const { return indices_[k]; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }
  const std::vector<Index>& indices() const { return indices_; }

  bool contains(Index i) const;
  /// Throws std::out_of_range when an index is >= bound.
  void check_bound(Index bound) const;
  IndexSet complement(Index bound) const;
  std::string to_string() const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<Index> indices_;
};

Vec matvec(const Mat& a, const Vec& x);

Mat submatrix_cols(const Mat& a, const IndexSet& cols);

/// x restricted to I, as a |I|-vector.
Vec gather(const Vec& x, const IndexSet& cols);
/// Inverse of gather: a p-vector equal to `values` on I and zero elsewhere.
Vec scatter(const Vec& values, const IndexSet& cols, Index p);

/// Largest singular value of A.
///
/// When min(rows, cols) <= 1024 it is read off the dense eigenvalues of the
/// smaller of A A* and A* A. Larger matrices use power iteration on A*A: the
/// start vector is the normalized all-ones vector. Iteration stops once
/// the Rayleigh quotient changes by less than `tol` (relative) on two
/// consecutive steps. If the result falls below the largest column norm the
/// start vector was deficient, and the iteration is rerun from the unit
/// vector of that column, which makes operator_norm(A) >= max column norm.
double operator_norm(const Mat& a, double tol = 1e-12, int max_iter = 100000);

/// X_I^* X_I.
Mat gram(const Mat& x, const IndexSet& cols);

/// Cholesky factor of a symmetric positive definite matrix.
class SpdFactor {
 public:
  static constexpr double kMinRcond = 1e-12;

  /// Throws SingularMatrixError if G is not numerically SPD.
  explicit SpdFactor(const Mat& g);

  Vec solve(const Vec& b) const;
  Mat solve(const Mat& b) const;
  /// Evaluates an expression right-hand side first.
  template <class Derived>
  Mat solve(const Eigen::MatrixBase<Derived>& b) const {
    return solve(Mat(b));
  }
  Index dim() const { return llt_.rows(); }

 private:
  Eigen::LLT<Mat> llt_;
};

/// Solves G x = b for symmetric positive definite G.
Vec solve_spd(const Mat& g, const Vec& b);

/// P[I] w, the orthogonal projection of w onto span{X_i : i in I}.
Vec projector_apply(const Mat& x, const IndexSet& cols, const Vec& w);

/// Least squares restricted to support I; returns a p-vector zero off I.
Vec least_squares(const Mat& x, const IndexSet& cols, const Vec& y);

double inf_norm(const Vec& v);

/// Throws std::invalid_argument naming `what` if v has a NaN or Inf entry.
void require_finite(const Vec& v, const char* what);
void require_finite(const Mat& m, const char* what);

}  // namespace lassolab
