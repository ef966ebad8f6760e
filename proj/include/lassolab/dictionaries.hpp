#pragma once

#include "lassolab/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace lassolab {

/// n x p design with unit-norm columns. Coherence and operator norm are
/// computed once at construction; instances are immutable.
class DesignMatrix {
 public:
  const Mat& X() const { return x_; }
  Index n() const { return x_.rows(); }
  Index p() const { return x_.cols(); }
  auto column(Index i) const { return x_.col(i); }

  /// max_{i<j} |<X_i, X_j>|; 0 when p < 2.
  double coherence() const { return coherence_; }
  /// Largest singular value.
  double opnorm() const { return opnorm_; }
  const std::string& label() const { return label_; }
  /// True if normalize_columns rescaled at least one column.
  bool normalization_changed() const { return normalization_changed_; }

 private:
  friend DesignMatrix normalize_columns(Mat a, std::string label);
  DesignMatrix() = default;

  Mat x_;
  double coherence_ = 0.0;
  double opnorm_ = 0.0;
  std::string label_;
  bool normalization_changed_ = false;
};

/// Rescales every column to unit l2 norm. A column whose norm already equals
/// 1 to within 1e-14 is left bit-for-bit untouched.
/// Throws std::invalid_argument on a zero column.
DesignMatrix normalize_columns(Mat a, std::string label = "custom");

/// Exhaustive pair scan of max |<A_i, A_j>| over i < j.
double pairwise_coherence(const Mat& a);

/// Throws std::invalid_argument when p < 2.
double coherence(const DesignMatrix& d);

struct CoherenceVerdict {
  bool holds = false;
  double ratio = 0.0;  // mu(X) log p / A0; holds <=> ratio <= 1
};

/// Checks mu(X) <= A0 / log p.
CoherenceVerdict coherence_property_holds(const DesignMatrix& d, double a0);

/// I.i.d. N(0,1) entries drawn column by column, then normalized.
DesignMatrix gaussian_design(Index n, Index p, std::uint64_t seed);

/// The real Fourier orthobasis of R^n (n even) as columns, in order
///   phi_1 = 1/sqrt(n),
///   phi_{2k} = sqrt(2/n) cos(2 pi k t / n), phi_{2k+1} = sqrt(2/n) sin(2 pi k t / n),
///   phi_n = (-1)^t / sqrt(n),
/// for t = 0..n-1 and k = 1..n/2-1. Column c holds phi_{c+1}.
Mat fourier_orthobasis(Index n);

/// [I_n F_n], n x 2n. Throws for odd n.
DesignMatrix spikes_and_sines(Index n);

/// [I_n F_n without phi_1], n x (2n-1), for n a power of 4.
DesignMatrix counterexample_dictionary(Index n);

/// Coefficients over counterexample_dictionary(n) expressing the constant
/// vector through the discrete Poisson summation identity: sqrt(n) spikes at
/// multiples of sqrt(n), -sqrt(n) on phi_n and -sqrt(2n) on phi_{k 2^{j+1}}.
Vec comb_identity_coeffs(Index n);

/// Block diagonal n x n matrix of n/2 copies of a 2x2 block whose unit
/// columns have inner product 1 - eps. Requires n even and 0 < eps <= 1.
DesignMatrix coherent_block_design(Index n, double eps);

/// Unit columns of the 2x2 block used by coherent_block_design.
Mat coherent_block(double eps);

class CsvParseError : public std::runtime_error {
 public:
  CsvParseError(std::size_t row, std::size_t col, const std::string& what);
  std::size_t row() const { return row_; }  // 1-based line number
  std::size_t col() const { return col_; }  // 1-based field number, 0 if row-level

 private:
  std::size_t row_;
  std::size_t col_;
};

/// Dense matrix from CSV: one row per observation, comma separated, no header
/// unless `has_header`.
Mat read_csv_matrix(const std::filesystem::path& path, bool has_header = false);
/// Writes entries with 17 significant digits.
void write_csv_matrix(const Mat& m, const std::filesystem::path& path);

DesignMatrix load_matrix_csv(const std::filesystem::path& path, bool has_header = false);
void save_matrix_csv(const DesignMatrix& d, const std::filesystem::path& path);

/// A double rendered with 17 significant digits (round-trips exactly).
std::string format_double(double v);

}  // namespace lassolab
