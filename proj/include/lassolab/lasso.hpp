#pragma once

#include "lassolab/dictionaries.hpp"
#include "lassolab/linalg.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace lassolab {

/// 2 sqrt(2 log p), the penalty level used throughout the theory.
double default_lambda(Index p);
/// sqrt(2 log p).
double lambda_p(Index p);

/// min_b 1/2 ||y - X b||^2 + lambda sigma ||b||_1.
///
/// The design is held by reference and must outlive the problem. sigma = 0 is
/// rejected: the penalty would vanish. To solve a noiseless instance with
/// penalty level t, pass sigma = 1 and lambda = t.
class LassoProblem {
 public:
  LassoProblem(const DesignMatrix& design, Vec y, double lambda, double sigma);

  const DesignMatrix& design() const { return *design_; }
  const Vec& y() const { return y_; }
  double lambda() const { return lambda_; }
  double sigma() const { return sigma_; }
  /// lambda * sigma.
  double penalty() const { return lambda_ * sigma_; }

  double objective(const Vec& b) const;
  /// X^*(y - X b).
  Vec correlations(const Vec& b) const;

 private:
  const DesignMatrix* design_;
  Vec y_;
  double lambda_;
  double sigma_;
};

enum class Backend { fista, coordinate_descent };

Backend parse_backend(std::string_view name);
std::string_view to_string(Backend b);

struct SolverOptions {
  Backend backend = Backend::fista;
  int max_iter = 100000;
  /// Converged once kkt_residual <= tol * (1 + lambda sigma).
  double tol = 1e-8;
  /// Support is { i : |b_i| > support_rel * max(1, ||b||_inf) }.
  double support_rel = 1e-6;
  bool record_objective = false;
};

struct LassoSolution {
  Vec beta_hat;
  double objective = 0.0;
  double kkt_residual = 0.0;
  IndexSet support;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // filled when SolverOptions::record_objective
};

/// Either backend returns a solution with converged = false (rather than
/// throwing) when max_iter is exhausted.
LassoSolution solve(const LassoProblem& problem, const SolverOptions& opts = {});

/// sgn(v) max(|v| - t, 0), entrywise.
Vec soft_threshold(const Vec& v, double t);

/// Largest violation of the subgradient optimality conditions at b:
/// |X_i^*(y - Xb) - lambda sigma sgn(b_i)| where b_i != 0 and
/// max(0, |X_i^*(y - Xb)| - lambda sigma) where b_i = 0.
double kkt_residual(const LassoProblem& problem, const Vec& b);

struct UniquenessVerdict {
  bool unique = false;
  bool gram_nonsingular = false;
  /// lambda sigma - max_{i off support} |X_i^*(y - X b)|; +inf if the support is everything.
  double off_support_margin = 0.0;
};

/// Sufficient condition for sol to be the unique minimizer: strict
/// off-support inequalities (margin >= strict_margin) and linearly
/// independent support columns.
UniquenessVerdict uniqueness_certificate(const LassoProblem& problem, const LassoSolution& sol,
                                         double strict_margin = 1e-6);

/// ||X^*(y - X b)||_inf at the solution.
double dantzig_feasibility(const LassoProblem& problem, const LassoSolution& sol);

/// Perturbation h with h_I = (X_I^*X_I)^{-1}[X_I^*z - 2 lambda_p sgn(beta_I)]
/// and zero off I. Throws SingularMatrixError for a singular Gram.
Vec closed_form_on_support(const DesignMatrix& d, const IndexSet& support, std::span<const int> signs,
                           const Vec& z, double lambda_p);

/// Least-squares refit of y on the detected support.
Vec two_step_refit(const LassoProblem& problem, const LassoSolution& sol);

}  // namespace lassolab
