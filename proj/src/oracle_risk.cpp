#include "lassolab/oracle_risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lassolab {

double oracle_estimator_risk(const DesignMatrix& d, const IndexSet& support, const Vec& beta, const Vec& z) {
  if (beta.size() != d.p()) throw DimensionError("oracle_estimator_risk: beta must have p entries");
  if (z.size() != d.n()) throw DimensionError("oracle_estimator_risk: z must have n entries");
  const Vec signal = d.X() * beta;
  const Vec fit = d.X() * least_squares(d.X(), support, signal + z);
  return (signal - fit).squaredNorm();
}

MseDecomposition model_mse_decomposition(const DesignMatrix& d, const IndexSet& support, const Vec& beta,
                                         double sigma) {
  if (beta.size() != d.p()) throw DimensionError("model_mse_decomposition: beta must have p entries");
  if (!(sigma >= 0.0)) throw std::invalid_argument("model_mse_decomposition: sigma must be >= 0");
  const Vec signal = d.X() * beta;
  MseDecomposition m;
  m.bias2 = (signal - projector_apply(d.X(), support, signal)).squaredNorm();
  m.variance = static_cast<double>(support.size()) * sigma * sigma;
  return m;
}

IdealRisk ideal_risk(const DesignMatrix& d, const Vec& beta, double sigma, const SearchCap& cap,
                     std::uint64_t tie_seed) {
  const BestSubsetModel best = best_subset_model(d, beta, sigma, cap, tie_seed);
  return {best.objective, best.support};
}

MTermApproximation best_m_term(const DesignMatrix& d, const Vec& f, Index m, const SearchCap& cap) {
  if (m < 0) throw std::invalid_argument("best_m_term: m must be >= 0");
  if (f.size() != d.n()) throw DimensionError("best_m_term: f must have n entries");
  if (cap.max_size && *cap.max_size < std::min(m, d.p())) {
    throw ExhaustiveSearchRefused("best_m_term: search cap " + std::to_string(*cap.max_size) +
                                  " is below m = " + std::to_string(m));
  }
  const SubsetEnumerator en(d.X(), f, SearchCap{std::min(m, d.p())});
  double best = std::numeric_limits<double>::infinity();
  IndexSet best_set;
  en.for_each([&](const IndexSet& cols, double r2) {
    if (r2 < best) {
      best = r2;
      best_set = cols;
    }
  });
  MTermApproximation out;
  out.support = best_set;
  out.fm = projector_apply(d.X(), best_set, f);
  out.err = (f - out.fm).norm();
  return out;
}

Tradeoff ideal_tradeoff(const DesignMatrix& d, const Vec& f, double sigma, const SearchCap& cap) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("ideal_tradeoff: sigma must be >= 0");
  // min_m [min_{|I| <= m} r(I) + m sigma^2] = min_I [r(I) + |I| sigma^2]: the
  // inner minimum at the optimal m is attained with |I| = m.
  const SubsetSearchResult r = penalized_subset_search(d, f, sigma * sigma, cap);
  return {r.objective, static_cast<Index>(r.support.size())};
}

double theorem12_bound(Index s, Index p, double sigma) {
  if (s < 0 || p < 2) throw std::invalid_argument("theorem12_bound: need S >= 0 and p >= 2");
  return kC0 * 2.0 * std::log(static_cast<double>(p)) * static_cast<double>(s) * sigma * sigma;
}

Theorem14Bound theorem14_bound(const DesignMatrix& d, const Vec& beta, double sigma, const SearchCap& cap) {
  if (beta.size() != d.p()) throw DimensionError("theorem14_bound: beta must have p entries");
  if (!(sigma >= 0.0)) throw std::invalid_argument("theorem14_bound: sigma must be >= 0");
  const double cost = kC0Prime * 2.0 * std::log(static_cast<double>(d.p())) * sigma * sigma;
  const SubsetSearchResult r = penalized_subset_search(d, d.X() * beta, cost, cap);
  Theorem14Bound b;
  b.inner_min = r.objective;
  b.value = (1.0 + std::numbers::sqrt2) * r.objective;
  b.support = r.support;
  return b;
}

RiskReport make_risk_report(double squared_error, double ideal_risk, double theorem_bound) {
  RiskReport r;
  r.squared_error = squared_error;
  r.ideal_risk = ideal_risk;
  r.ratio = squared_error / std::max(ideal_risk, kTiny);
  r.theorem_bound = theorem_bound;
  r.bound_satisfied = squared_error <= theorem_bound;
  return r;
}

}  // namespace lassolab
