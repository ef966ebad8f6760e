#include "lassolab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lassolab {

IndexSet::IndexSet(std::vector<Index> indices) : indices_(std::move(indices)) {
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k] < 0) {
      throw std::invalid_argument("IndexSet: negative index");
    }
    if (k > 0 && indices_[k] <= indices_[k - 1]) {
      throw std::invalid_argument("IndexSet: indices must be strictly increasing");
    }
  }
}

IndexSet IndexSet::from_unsorted(std::vector<Index> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return IndexSet(std::move(indices));
}

IndexSet IndexSet::range(Index count) {
  std::vector<Index> idx(static_cast<std::size_t>(std::max<Index>(count, 0)));
  for (Index i = 0; i < count; ++i) idx[static_cast<std::size_t>(i)] = i;
  return IndexSet(std::move(idx));
}

IndexSet IndexSet::nonzeros(const Vec& v, double threshold) {
  std::vector<Index> idx;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > threshold) idx.push_back(i);
  }
  return IndexSet(std::move(idx));
}

bool IndexSet::contains(Index i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

void IndexSet::check_bound(Index bound) const {
  if (!indices_.empty() && indices_.back() >= bound) {
    throw std::out_of_range("IndexSet: index " + std::to_string(indices_.back()) +
                            " out of range for dimension " + std::to_string(bound));
  }
}

IndexSet IndexSet::complement(Index bound) const {
  check_bound(bound);
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(bound) - indices_.size());
  auto it = indices_.begin();
  for (Index i = 0; i < bound; ++i) {
    if (it != indices_.end() && *it == i) {
      ++it;
    } else {
      out.push_back(i);
    }
  }
  return IndexSet(std::move(out));
}

std::string IndexSet::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (k) os << ',';
    os << indices_[k];
  }
  os << '}';
  return os.str();
}

Vec matvec(const Mat& a, const Vec& x) {
  if (a.cols() != x.size()) {
    throw DimensionError("matvec: matrix has " + std::to_string(a.cols()) +
                         " columns but vector has " + std::to_string(x.size()) + " entries");
  }
  return a * x;
}

Mat submatrix_cols(const Mat& a, const IndexSet& cols) {
  cols.check_bound(a.cols());
  Mat out(a.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.col(static_cast<Index>(k)) = a.col(cols[k]);
  }
  return out;
}

Vec gather(const Vec& x, const IndexSet& cols) {
  cols.check_bound(x.size());
  Vec out(static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out[static_cast<Index>(k)] = x[cols[k]];
  return out;
}

Vec scatter(const Vec& values, const IndexSet& cols, Index p) {
  if (values.size() != static_cast<Index>(cols.size())) {
    throw DimensionError("scatter: value count does not match index set size");
  }
  cols.check_bound(p);
  Vec out = Vec::Zero(p);
  for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] = values[static_cast<Index>(k)];
  return out;
}

namespace {

constexpr Index kDenseOpnormMax = 1024;

// Returns the converged Rayleigh quotient ||A v||^2 starting from v.
double power_iterate(const Mat& a, Vec v, double tol, int max_iter) {
  double rho_prev = -1.0;
  int calm_steps = 0;
  for (int it = 0; it < max_iter; ++it) {
    const double vn = v.norm();
    if (vn == 0.0) return 0.0;
    v /= vn;
    const Vec av = a * v;
    const double rho = av.squaredNorm();
    if (rho == 0.0) return 0.0;
    if (rho_prev >= 0.0 && std::abs(rho - rho_prev) <= tol * rho) {
      if (++calm_steps >= 2) return rho;
    } else {
      calm_steps = 0;
    }
    rho_prev = rho;
    v = a.transpose() * av;
  }
  return rho_prev;
}

}  // namespace

double operator_norm(const Mat& a, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("operator_norm: tol must be positive");
  if (a.size() == 0) return 0.0;
  Index best_col = 0;
  const double max_col2 = a.colwise().squaredNorm().maxCoeff(&best_col);
  if (max_col2 == 0.0) return 0.0;

  // Exact dense eigenvalues of the smaller Gram matrix while that is cheap.
  if (std::min(a.rows(), a.cols()) <= kDenseOpnormMax) {
    const Mat g = a.rows() < a.cols() ? Mat(a * a.transpose()) : Mat(a.transpose() * a);
    const Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(es.eigenvalues().maxCoeff(), max_col2));
  }
  double rho = power_iterate(a, Vec::Ones(a.cols()), tol, max_iter);
  if (rho < max_col2 * (1.0 - tol)) {
    rho = power_iterate(a, Vec::Unit(a.cols(), best_col), tol, max_iter);
  }
  return std::sqrt(std::max(rho, max_col2));
}

Mat gram(const Mat& x, const IndexSet& cols) {
  const Mat xi = submatrix_cols(x, cols);
  return xi.transpose() * xi;
}

SpdFactor::SpdFactor(const Mat& g) {
  if (g.rows() != g.cols()) throw DimensionError("SpdFactor: matrix is not square");
  if (g.rows() == 0) return;
  llt_.compute(g);
  if (llt_.info() != Eigen::Success) {
    throw SingularMatrixError("Cholesky factorization failed: matrix is not positive definite");
  }
  const double rc = llt_.rcond();
  if (!(rc >= kMinRcond)) {
    throw SingularMatrixError("Cholesky factorization: matrix is numerically singular (rcond " +
                              std::to_string(rc) + ")");
  }
}

Vec SpdFactor::solve(const Vec& b) const {
  if (b.size() != dim()) throw DimensionError("SpdFactor::solve: dimension mismatch");
  if (dim() == 0) return Vec(0);
  return llt_.solve(b);
}

Mat SpdFactor::solve(const Mat& b) const {
  if (b.rows() != dim()) throw DimensionError("SpdFactor::solve: dimension mismatch");
  if (dim() == 0) return Mat(0, b.cols());
  return llt_.solve(b);
}

Vec solve_spd(const Mat& g, const Vec& b) {
  return SpdFactor(g).solve(b);
}

Vec projector_apply(const Mat& x, const IndexSet& cols, const Vec& w) {
  if (w.size() != x.rows()) throw DimensionError("projector_apply: vector length must equal rows(X)");
  if (cols.empty()) return Vec::Zero(x.rows());
  const Mat xi = submatrix_cols(x, cols);
  const Vec coef = SpdFactor(xi.transpose() * xi).solve(xi.transpose() * w);
  return xi * coef;
}

Vec least_squares(const Mat& x, const IndexSet& cols, const Vec& y) {
  if (y.size() != x.rows()) throw DimensionError("least_squares: response length must equal rows(X)");
  if (cols.empty()) {
    cols.check_bound(x.cols());
    return Vec::Zero(x.cols());
  }
  const Mat xi = submatrix_cols(x, cols);
  const Vec coef = SpdFactor(xi.transpose() * xi).solve(xi.transpose() * y);
  return scatter(coef, cols, x.cols());
}

double inf_norm(const Vec& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

}  // namespace lassolab
