#pragma once

#include "lassolab/dictionaries.hpp"
#include "lassolab/linalg.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lassolab {

/// One inequality "value <= threshold" (or "<" when strict) with its verdict.
/// An undefined value (singular Gram) is reported as +inf and never passes.
struct ConditionCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool strict = false;
  bool ok = false;
};

ConditionCheck make_check(std::string name, double value, double threshold, bool strict = false);

/// ||(X_I^* X_I)^{-1}|| = 1 / lambda_min(X_I^* X_I) <= 2. A singular Gram
/// gives +inf; the empty set gives 1.
ConditionCheck invertibility_condition(const DesignMatrix& d, const IndexSet& support);

/// ||X^* z||_inf <= sqrt(2) lambda_p.
ConditionCheck orthogonality_condition(const DesignMatrix& d, const Vec& z, double lambda_p);

/// ||X_{I^c}^* X_I G^{-1} X_I^* z||_inf + 2 lambda_p ||X_{I^c}^* X_I G^{-1} s||_inf
/// <= (2 - sqrt 2) lambda_p, with G = X_I^* X_I and s the signs on I.
/// Throws SingularMatrixError for a singular G.
ConditionCheck complementary_size_condition(const DesignMatrix& d, const IndexSet& support,
                                            std::span<const int> signs, const Vec& z, double lambda_p);

/// ||X_{I^c}^* X_I G^{-1} s||_inf <= 1 - nu. Throws SingularMatrixError for a singular G.
ConditionCheck irrepresentable_condition(const DesignMatrix& d, const IndexSet& support,
                                         std::span<const int> signs, double nu = 0.75);

/// The five sufficient conditions for exact recovery, in order:
///   (i)   ||G^{-1}|| <= 2
///   (ii)  ||X_{I^c}^* X_I G^{-1} s||_inf < 1/4
///   (iii) ||G^{-1} X_I^* z||_inf <= 2 lambda_p
///   (iv)  ||X_{I^c}^* (Id - P[I]) z||_inf <= sqrt(2) lambda_p
///   (v)   ||G^{-1} s||_inf <= 3
/// With a singular G, (i)-(iii) and (v) are +inf; (iv) only needs the
/// projection onto span(X_I) and is evaluated regardless.
std::array<ConditionCheck, 5> thm13_conditions(const DesignMatrix& d, const IndexSet& support,
                                               std::span<const int> signs, const Vec& z, double lambda_p);

bool all_ok(std::span<const ConditionCheck> checks);

struct ConditionReport {
  ConditionCheck invertibility;
  ConditionCheck orthogonality;
  ConditionCheck complementary_size;
  ConditionCheck irrepresentable;
  std::array<ConditionCheck, 5> thm13;
};

/// Every condition on one instance. Never throws for a singular Gram: the
/// affected values are +inf.
ConditionReport condition_report(const DesignMatrix& d, const IndexSet& support, std::span<const int> signs,
                                 const Vec& z, double lambda_p, double nu = 0.75);

struct AdmissibilityReport {
  ConditionCheck cond1;  // ||G^{-1}|| <= 2
  ConditionCheck cond2;  // ||X_{I^c}^* X_I G^{-1} b_I||_inf <= 1/4
  ConditionCheck cond3;  // max_{i not in I} ||X_I G^{-1} X_I^* X_i|| <= c0 / sqrt(log p)
  bool admissible = false;
};

/// Membership of the sign pattern b in {-1, 0, 1}^p in the admissible set;
/// I is the support of b.
AdmissibilityReport admissible_sign_pattern(const DesignMatrix& d, std::span<const int> pattern,
                                            double c0 = 0.125);

/// sum_{j in I, j != i} <X_i, X_j>^2.
double lemma36_statistic(const DesignMatrix& d, const IndexSet& support, Index i);

/// Empirical exceedance frequency of a probability bound. The check passes
/// when the frequency is at most bound + 3 binomial standard errors, the
/// standard error being evaluated at the bound (clipped to [0, 1]).
struct TailCheck {
  double t = 0.0;
  std::size_t exceed = 0;
  std::size_t trials = 0;
  double empirical = 0.0;
  double bound = 0.0;
  double std_error = 0.0;
  bool ok = false;
};

TailCheck make_tail_check(double t, std::size_t exceed, std::size_t trials, double bound);

/// P(||X^* z||_inf > t) for z ~ N(0, Id) against 2 p phi(t) / t.
TailCheck correlation_tail_check(const DesignMatrix& d, double t, std::size_t trials, std::uint64_t seed);

/// P(stat > S ||X||^2 / p + t) over uniform S-subsets I, for the fixed column
/// i, against 2 exp(-t^2 / (2 mu^2 (S ||X||^2 / p + t / 3))). The default t
/// is 1 / (8 log p).
TailCheck lemma36_tail_check(const DesignMatrix& d, Index s, Index column, std::size_t trials,
                             std::uint64_t seed, std::optional<double> t = std::nullopt);

struct TroppEstimate {
  double q = 0.0;
  std::size_t trials = 0;
  double mean_support_size = 0.0;
  /// (mean ||X_I^* X_I - Id||^q)^{1/q} and 30 mu log p + 13 sqrt(2 S ||X||^2 log p / p).
  double empirical_q_norm = 0.0;
  double bound = 0.0;
  /// (mean max_{i in I^c} ||X_I^* X_i||^q)^{1/q} and 4 mu sqrt(log p) + sqrt(S ||X||^2 / p).
  double companion_q_norm = 0.0;
  double companion_bound = 0.0;
};

/// Moment estimates over Bernoulli supports (each column kept with
/// probability S / p). q defaults to 2 log p. Throws std::invalid_argument
/// unless S ||X||^2 / p <= 1/4.
TroppEstimate tropp_moment_estimate(const DesignMatrix& d, Index s, std::size_t trials, std::uint64_t seed,
                                    std::optional<double> q = std::nullopt);

enum class MaximaNoise { signs, gaussian };

struct MaximaTailTable {
  double kappa = 0.0;
  std::size_t count = 0;  // |J|
  MaximaNoise noise = MaximaNoise::signs;
  std::vector<TailCheck> rows;
  bool ok = false;
};

/// Tail of Z = max_j |<W_j, s>| over random fair signs s (or z ~ N(0, Id)) at
/// each t in `t_grid`, against 2 |J| exp(-t^2 / (2 kappa^2)). The columns of
/// `w` are the W_j; kappa defaults to max_j ||W_j|| and must not be smaller.
MaximaTailTable hoeffding_maxima_check(const Mat& w, std::span<const double> t_grid, std::size_t trials,
                                       std::uint64_t seed, MaximaNoise noise = MaximaNoise::signs,
                                       std::optional<double> kappa = std::nullopt);

}  // namespace lassolab
