#pragma once

#include "lassolab/dictionaries.hpp"
#include "lassolab/linalg.hpp"
#include "lassolab/sparse_models.hpp"

#include <cstdint>
#include <numbers>

namespace lassolab {

/// Constant of the lasso risk bound for generic sparse signals, 8(1 + sqrt 2)^2.
inline constexpr double kC0 = 8.0 * (1.0 + std::numbers::sqrt2) * (1.0 + std::numbers::sqrt2);
/// Constant of the oracle inequality against the ideal risk, 12 + 10 sqrt 2.
inline constexpr double kC0Prime = 12.0 + 10.0 * std::numbers::sqrt2;
/// Floor applied to the ideal risk before forming a ratio.
inline constexpr double kTiny = 1e-300;

/// Realized ||X beta - X beta*||^2 where beta* is the least-squares fit of
/// y = X beta + z restricted to I. Equals ||P[I] z||^2 when supp(beta) is in I.
double oracle_estimator_risk(const DesignMatrix& d, const IndexSet& support, const Vec& beta, const Vec& z);

struct MseDecomposition {
  double bias2 = 0.0;     // ||(Id - P[I]) X beta||^2
  double variance = 0.0;  // |I| sigma^2
  double total() const { return bias2 + variance; }
};

/// Expected squared error of least squares on I: bias plus variance.
MseDecomposition model_mse_decomposition(const DesignMatrix& d, const IndexSet& support, const Vec& beta,
                                         double sigma);

struct IdealRisk {
  double risk = 0.0;
  IndexSet support;  // I_0
};

/// min_I ||(Id - P[I]) X beta||^2 + |I| sigma^2 by exhaustive search.
IdealRisk ideal_risk(const DesignMatrix& d, const Vec& beta, double sigma, const SearchCap& cap = {},
                     std::uint64_t tie_seed = 0);

struct MTermApproximation {
  Vec fm;
  double err = 0.0;  // ||f - f_m||
  IndexSet support;
};

/// Best approximation of f by at most m columns. A cap.max_size below m
/// would make the answer inexact and is refused.
MTermApproximation best_m_term(const DesignMatrix& d, const Vec& f, Index m, const SearchCap& cap = {});

struct Tradeoff {
  double value = 0.0;
  Index m = 0;  // number of terms at the optimum
};

/// min_m ||f - f_m||^2 + m sigma^2.
Tradeoff ideal_tradeoff(const DesignMatrix& d, const Vec& f, double sigma, const SearchCap& cap = {});

/// C0 (2 log p) S sigma^2.
double theorem12_bound(Index s, Index p, double sigma);

struct Theorem14Bound {
  double value = 0.0;      // (1 + sqrt 2) * inner_min
  double inner_min = 0.0;  // min_I ||X beta - P[I] X beta||^2 + C0' (2 log p) |I| sigma^2
  IndexSet support;        // minimizing I
};

Theorem14Bound theorem14_bound(const DesignMatrix& d, const Vec& beta, double sigma, const SearchCap& cap = {});

struct RiskReport {
  double squared_error = 0.0;
  double ideal_risk = 0.0;
  double ratio = 0.0;  // squared_error / max(ideal_risk, kTiny)
  double theorem_bound = 0.0;
  bool bound_satisfied = false;
};

RiskReport make_risk_report(double squared_error, double ideal_risk, double theorem_bound);

}  // namespace lassolab
