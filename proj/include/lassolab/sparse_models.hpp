#pragma once

#include "lassolab/dictionaries.hpp"
#include "lassolab/linalg.hpp"
#include "lassolab/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lassolab {

/// Ground-truth coefficient vector with its support, signs and amplitudes.
struct SparseModel {
  IndexSet support;
  std::vector<int> signs;          // +-1, one per support entry
  std::vector<double> amplitudes;  // > 0, one per support entry
  Vec beta;                        // p-vector, sign * amplitude on the support
};

/// How amplitudes of nonzero coefficients are drawn.
class AmplitudeRule {
 public:
  using Generator = std::function<double(Rng&)>;

  static AmplitudeRule constant(double value);
  /// factor * 8 sigma sqrt(2 log p), the support-recovery threshold.
  static AmplitudeRule recovery_threshold(double sigma, Index p, double factor = 1.0);
  static AmplitudeRule custom(Generator gen);

  double operator()(Rng& rng) const { return gen_(rng); }

 private:
  explicit AmplitudeRule(Generator gen) : gen_(std::move(gen)) {}
  Generator gen_;
};

/// Uniformly random S-subset of {0..p-1} with independent fair signs.
SparseModel sample_generic_sparse(Index p, Index s, const AmplitudeRule& amplitude,
                                  std::uint64_t seed);

/// Uniform random S-subset, sorted.
IndexSet sample_support(Index p, Index s, Rng& rng);

/// Each coordinate independently +1/eps or -1/eps with probability
/// n^{-1/2} each, zero otherwise.
SparseModel sample_blockwise_beta(Index n, double eps, std::uint64_t seed);

/// y = X beta + z with z ~ N(0, sigma^2 I).
struct Observation {
  Vec y;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  Vec z;
};

Observation observe(const DesignMatrix& d, const Vec& beta, double sigma, std::uint64_t seed);

class ExhaustiveSearchRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Limits on exhaustive subset enumeration. With p <= kFullEnumerationMaxP
/// every subset (up to `max_size`, if given) is visited; larger p requires
/// an explicit max_size <= kLargePMaxSubsetSize.
struct SearchCap {
  static constexpr Index kFullEnumerationMaxP = 20;
  static constexpr Index kLargePMaxSubsetSize = 3;

  std::optional<Index> max_size;

  /// Largest subset size to visit for dimension p, or throws ExhaustiveSearchRefused.
  Index resolve(Index p) const;
};

/// Residual energy ||(Id - P[I]) f||^2 of projecting f onto each subset of
/// columns, computed from the Gram matrix. Rank-deficient subsets are skipped.
class SubsetEnumerator {
 public:
  SubsetEnumerator(const Mat& x, const Vec& f, const SearchCap& cap);

  /// Visits every full-rank subset of size <= max_size() once, in
  /// lexicographic order of the sorted index tuples (the empty set first):
  /// visit(const IndexSet&, double residual2).
  void for_each(const std::function<void(const IndexSet&, double)>& visit) const;

  /// Residual of a single subset; throws SingularMatrixError if rank-deficient.
  double residual2(const IndexSet& cols) const;

  Index max_size() const { return max_size_; }

 private:
  Mat g_;
  Vec c_;
  double ff_;
  Index p_;
  Index max_size_;
};

/// Minimizer of ||(Id - P[I]) f||^2 + per_index_cost * |I|.
struct SubsetSearchResult {
  IndexSet support;
  double residual2 = 0.0;
  double objective = 0.0;
  std::size_t tie_count = 1;
};

/// Exact minimization by enumeration. Ties (objective within 1e-12 relative)
/// are broken uniformly at random with `tie_seed`.
SubsetSearchResult penalized_subset_search(const DesignMatrix& d, const Vec& f, double per_index_cost,
                                           const SearchCap& cap, std::uint64_t tie_seed = 0);

/// Best model of the ideal risk min_I ||(Id - P[I]) X beta||^2 + |I| sigma^2.
struct BestSubsetModel {
  IndexSet support;      // I_0
  Vec beta0;             // X beta0 = P[I_0] X beta
  double residual_bias;  // ||(Id - P[I_0]) X beta||^2
  double objective;      // residual_bias + |I_0| sigma^2
};

BestSubsetModel best_subset_model(const DesignMatrix& d, const Vec& beta, double sigma,
                                  const SearchCap& cap = {}, std::uint64_t tie_seed = 0);

}  // namespace lassolab
