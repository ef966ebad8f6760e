#include "lassolab/lasso.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lassolab {

double lambda_p(Index p) {
  if (p < 2) throw std::invalid_argument("lambda_p: need p >= 2");
  return std::sqrt(2.0 * std::log(static_cast<double>(p)));
}

double default_lambda(Index p) { return 2.0 * lambda_p(p); }

LassoProblem::LassoProblem(const DesignMatrix& design, Vec y, double lambda, double sigma)
    : design_(&design), y_(std::move(y)), lambda_(lambda), sigma_(sigma) {
  if (y_.size() != design.n()) {
    throw DimensionError("LassoProblem: y has " + std::to_string(y_.size()) + " entries, design has " +
                         std::to_string(design.n()) + " rows");
  }
  require_finite(y_, "LassoProblem");
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw std::invalid_argument("LassoProblem: lambda must be > 0");
  if (sigma_ == 0.0) {
    throw std::invalid_argument(
        "LassoProblem: sigma = 0 removes the penalty; fold the penalty level into lambda and pass sigma = 1");
  }
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw std::invalid_argument("LassoProblem: sigma must be > 0");
}

double LassoProblem::objective(const Vec& b) const {
  return 0.5 * (y_ - design_->X() * b).squaredNorm() + penalty() * b.lpNorm<1>();
}

Vec LassoProblem::correlations(const Vec& b) const {
  return design_->X().transpose() * (y_ - design_->X() * b);
}

Backend parse_backend(std::string_view name) {
  if (name == "fista") return Backend::fista;
  if (name == "cd" || name == "coordinate_descent") return Backend::coordinate_descent;
  throw std::invalid_argument("unknown backend '" + std::string(name) + "' (expected fista or cd)");
}

std::string_view to_string(Backend b) {
  return b == Backend::fista ? "fista" : "cd";
}

Vec soft_threshold(const Vec& v, double t) {
  return v.unaryExpr([t](double x) {
    const double m = std::abs(x) - t;
    return m > 0.0 ? std::copysign(m, x) : 0.0;
  });
}

namespace {

double kkt_from_correlations(const Vec& b, const Vec& c, double pen) {
  double worst = 0.0;
  for (Index i = 0; i < b.size(); ++i) {
    const double v = b[i] != 0.0 ? std::abs(c[i] - std::copysign(pen, b[i])) : std::max(0.0, std::abs(c[i]) - pen);
    worst = std::max(worst, v);
  }
  return worst;
}

IndexSet detect_support(const Vec& b, double rel) {
  return IndexSet::nonzeros(b, rel * std::max(1.0, inf_norm(b)));
}

// Accelerated proximal gradient with fixed step 1/||X||^2 and function-value
// restart: a momentum step that would raise the objective is discarded and
// the momentum reset.
void run_fista(const LassoProblem& prob, const SolverOptions& opts, LassoSolution& sol) {
  const Mat& x = prob.design().X();
  const Vec& obs = prob.y();
  const double pen = prob.penalty();
  const double lip = prob.design().opnorm() * prob.design().opnorm() * (1.0 + 1e-10);
  const double step = 1.0 / lip;
  const double stop = opts.tol * (1.0 + pen);
  constexpr int kKktEvery = 5;

  const Index p = x.cols();
  Vec b = Vec::Zero(p);
  Vec xb = Vec::Zero(x.rows());
  double fb = 0.5 * obs.squaredNorm();
  Vec mom = b;
  Vec xmom = xb;
  double t = 1.0;

  for (int it = 1; it <= opts.max_iter; ++it) {
    const Vec grad = x.transpose() * (xmom - obs);
    Vec cand = soft_threshold(mom - step * grad, step * pen);
    Vec xcand = x * cand;
    const double fc = 0.5 * (obs - xcand).squaredNorm() + pen * cand.lpNorm<1>();
    // Right after a restart the candidate is a plain proximal gradient step
    // from b, which cannot raise the objective in exact arithmetic; taking
    // it keeps rounding noise near the optimum from stalling the iteration.
    if (fc <= fb || t == 1.0) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double w = (t - 1.0) / t_next;
      mom = cand + w * (cand - b);
      xmom = xcand + w * (xcand - xb);
      b = std::move(cand);
      xb = std::move(xcand);
      fb = fc;
      t = t_next;
    } else {
      mom = b;
      xmom = xb;
      t = 1.0;
    }
    if (opts.record_objective) sol.objective_trace.push_back(fb);
    sol.iterations = it;
    if (it == 1 || it % kKktEvery == 0) {
      const Vec c = x.transpose() * (obs - xb);
      sol.kkt_residual = kkt_from_correlations(b, c, pen);
      if (sol.kkt_residual <= stop) {
        sol.converged = true;
        break;
      }
    }
  }
  sol.beta_hat = std::move(b);
}

// Cyclic coordinate descent with a maintained residual; one iteration is a
// full sweep over the columns.
void run_cd(const LassoProblem& prob, const SolverOptions& opts, LassoSolution& sol) {
  const Mat& x = prob.design().X();
  const double pen = prob.penalty();
  const double stop = opts.tol * (1.0 + pen);
  const Index p = x.cols();
  const Vec col2 = x.colwise().squaredNorm().transpose();

  Vec b = Vec::Zero(p);
  Vec r = prob.y();
  for (int it = 1; it <= opts.max_iter; ++it) {
    for (Index j = 0; j < p; ++j) {
      const double old = b[j];
      const double rho = x.col(j).dot(r) + col2[j] * old;
      const double m = std::abs(rho) - pen;
      const double nb = m > 0.0 ? std::copysign(m, rho) / col2[j] : 0.0;
      if (nb != old) {
        r.noalias() -= (nb - old) * x.col(j);
        b[j] = nb;
      }
    }
    if (opts.record_objective) sol.objective_trace.push_back(0.5 * r.squaredNorm() + pen * b.lpNorm<1>());
    sol.iterations = it;
    const Vec c = x.transpose() * r;
    sol.kkt_residual = kkt_from_correlations(b, c, pen);
    if (sol.kkt_residual <= stop) {
      sol.converged = true;
      break;
    }
  }
  sol.beta_hat = std::move(b);
}

}  // namespace

LassoSolution solve(const LassoProblem& problem, const SolverOptions& opts) {
  if (opts.max_iter < 1 || !(opts.tol > 0.0) || !(opts.support_rel >= 0.0)) {
    throw std::invalid_argument("solve: invalid solver options");
  }
  LassoSolution sol;
  if (opts.backend == Backend::fista) {
    run_fista(problem, opts, sol);
  } else {
    run_cd(problem, opts, sol);
  }
  sol.kkt_residual = kkt_residual(problem, sol.beta_hat);
  sol.objective = problem.objective(sol.beta_hat);
  sol.support = detect_support(sol.beta_hat, opts.support_rel);
  return sol;
}

double kkt_residual(const LassoProblem& problem, const Vec& b) {
  if (b.size() != problem.design().p()) throw DimensionError("kkt_residual: b must have p entries");
  return kkt_from_correlations(b, problem.correlations(b), problem.penalty());
}

UniquenessVerdict uniqueness_certificate(const LassoProblem& problem, const LassoSolution& sol,
                                         double strict_margin) {
  UniquenessVerdict v;
  const Vec c = problem.correlations(sol.beta_hat);
  double off_max = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < c.size(); ++i) {
    if (!sol.support.contains(i)) off_max = std::max(off_max, std::abs(c[i]));
  }
  v.off_support_margin = problem.penalty() - off_max;
  try {
    SpdFactor f(gram(problem.design().X(), sol.support));
    v.gram_nonsingular = true;
  } catch (const SingularMatrixError&) {
    v.gram_nonsingular = false;
  }
  v.unique = v.gram_nonsingular && v.off_support_margin >= strict_margin;
  return v;
}

double dantzig_feasibility(const LassoProblem& problem, const LassoSolution& sol) {
  return inf_norm(problem.correlations(sol.beta_hat));
}

Vec closed_form_on_support(const DesignMatrix& d, const IndexSet& support, std::span<const int> signs,
                           const Vec& z, double lambda_p) {
  if (signs.size() != support.size()) throw DimensionError("closed_form_on_support: one sign per support index");
  if (z.size() != d.n()) throw DimensionError("closed_form_on_support: z must have n entries");
  const Mat xi = submatrix_cols(d.X(), support);
  Vec s(static_cast<Index>(signs.size()));
  for (std::size_t k = 0; k < signs.size(); ++k) s[static_cast<Index>(k)] = signs[k];
  const Vec rhs = xi.transpose() * z - 2.0 * lambda_p * s;
  const Vec hi = SpdFactor(xi.transpose() * xi).solve(rhs);
  return scatter(hi, support, d.p());
}

Vec two_step_refit(const LassoProblem& problem, const LassoSolution& sol) {
  return least_squares(problem.design().X(), sol.support, problem.y());
}

}  // namespace lassolab
