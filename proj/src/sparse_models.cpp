#include "lassolab/sparse_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lassolab {

AmplitudeRule AmplitudeRule::constant(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("AmplitudeRule::constant: amplitude must be positive");
  return AmplitudeRule([value](Rng&) { return value; });
}

AmplitudeRule AmplitudeRule::recovery_threshold(double sigma, Index p, double factor) {
  if (!(sigma > 0.0) || !(factor > 0.0) || p < 2) {
    throw std::invalid_argument("AmplitudeRule::recovery_threshold: need sigma > 0, factor > 0, p >= 2");
  }
  const double a = factor * 8.0 * sigma * std::sqrt(2.0 * std::log(static_cast<double>(p)));
  return AmplitudeRule([a](Rng&) { return a; });
}

AmplitudeRule AmplitudeRule::custom(Generator gen) {
  if (!gen) throw std::invalid_argument("AmplitudeRule::custom: empty generator");
  return AmplitudeRule(std::move(gen));
}

IndexSet sample_support(Index p, Index s, Rng& rng) {
  if (s < 0 || s > p) throw std::invalid_argument("sample_support: need 0 <= S <= p");
  // Partial Fisher-Yates shuffle.
  std::vector<Index> pool(static_cast<std::size_t>(p));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index k = 0; k < s; ++k) {
    const auto j = k + static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - k)));
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(s));
  return IndexSet::from_unsorted(std::move(pool));
}

SparseModel sample_generic_sparse(Index p, Index s, const AmplitudeRule& amplitude, std::uint64_t seed) {
  if (s < 1 || s > p) throw std::invalid_argument("sample_generic_sparse: need 1 <= S <= p");
  Rng rng(seed);
  SparseModel m;
  m.support = sample_support(p, s, rng);
  m.beta = Vec::Zero(p);
  for (Index i : m.support) {
    const int sg = rng.sign();
    const double a = amplitude(rng);
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw std::invalid_argument("sample_generic_sparse: amplitude rule produced a non-positive value");
    }
    m.signs.push_back(sg);
    m.amplitudes.push_back(a);
    m.beta[i] = sg * a;
  }
  return m;
}

SparseModel sample_blockwise_beta(Index n, double eps, std::uint64_t seed) {
  if (n < 4 || !(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("sample_blockwise_beta: need n >= 4 and 0 < eps < 1");
  }
  Rng rng(seed);
  const double q = 1.0 / std::sqrt(static_cast<double>(n));
  const double a = 1.0 / eps;
  SparseModel m;
  m.beta = Vec::Zero(n);
  std::vector<Index> support;
  for (Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int sg = 0;
    if (u < q) {
      sg = 1;
    } else if (u < 2.0 * q) {
      sg = -1;
    }
    if (sg != 0) {
      support.push_back(i);
      m.signs.push_back(sg);
      m.amplitudes.push_back(a);
      m.beta[i] = sg * a;
    }
  }
  m.support = IndexSet(std::move(support));
  return m;
}

Observation observe(const DesignMatrix& d, const Vec& beta, double sigma, std::uint64_t seed) {
  if (beta.size() != d.p()) throw DimensionError("observe: beta must have p entries");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("observe: sigma must be >= 0");
  require_finite(beta, "observe");
  Rng rng(seed);
  Observation obs;
  obs.sigma = sigma;
  obs.seed = seed;
  obs.z.resize(d.n());
  for (Index i = 0; i < d.n(); ++i) obs.z[i] = sigma * rng.normal();
  obs.y = d.X() * beta + obs.z;
  return obs;
}

Index SearchCap::resolve(Index p) const {
  if (max_size && *max_size < 0) throw std::invalid_argument("SearchCap: negative size cap");
  if (p <= kFullEnumerationMaxP) return max_size ? std::min(*max_size, p) : p;
  if (max_size && *max_size <= kLargePMaxSubsetSize) return *max_size;
  throw ExhaustiveSearchRefused("exhaustive search refused: p = " + std::to_string(p) +
                                " exceeds " + std::to_string(kFullEnumerationMaxP) +
                                "; pass a subset size cap <= " + std::to_string(kLargePMaxSubsetSize));
}

SubsetEnumerator::SubsetEnumerator(const Mat& x, const Vec& f, const SearchCap& cap)
    : g_(x.transpose() * x),
      c_(x.transpose() * f),
      ff_(f.squaredNorm()),
      p_(x.cols()),
      max_size_(cap.resolve(x.cols())) {
  if (f.size() != x.rows()) throw DimensionError("SubsetEnumerator: f must have n entries");
}

namespace {

// A column is treated as dependent on the ones before it when its squared
// distance to their span falls below this fraction of its squared norm.
constexpr double kMinPivotRel = 1e-12;

}  // namespace

double SubsetEnumerator::residual2(const IndexSet& cols) const {
  cols.check_bound(p_);
  const auto k = static_cast<Index>(cols.size());
  Mat l = Mat::Zero(k, k);
  Vec w(k);
  double r2 = ff_;
  for (Index a = 0; a < k; ++a) {
    const Index ia = cols[static_cast<std::size_t>(a)];
    double ca = c_[ia];
    for (Index b = 0; b < a; ++b) {
      double gab = g_(ia, cols[static_cast<std::size_t>(b)]);
      for (Index m = 0; m < b; ++m) gab -= l(a, m) * l(b, m);
      l(a, b) = gab / l(b, b);
      ca -= l(a, b) * w[b];
    }
    const double d2 = g_(ia, ia) - l.row(a).head(a).squaredNorm();
    if (!(d2 > kMinPivotRel * g_(ia, ia))) {
      throw SingularMatrixError("subset " + cols.to_string() + " is rank deficient");
    }
    l(a, a) = std::sqrt(d2);
    w[a] = ca / l(a, a);
    r2 -= w[a] * w[a];
  }
  return std::max(0.0, r2);
}

void SubsetEnumerator::for_each(const std::function<void(const IndexSet&, double)>& visit) const {
  // Depth-first over strictly increasing index tuples (lexicographic order),
  // extending a Cholesky factor of the current prefix's Gram matrix one row
  // at a time. A rank-deficient prefix prunes all of its supersets.
  const auto kmax = static_cast<std::size_t>(max_size_);
  Mat l = Mat::Zero(std::max<Index>(max_size_, 1), std::max<Index>(max_size_, 1));
  std::vector<double> w(kmax + 1, 0.0);
  std::vector<double> r2(kmax + 1, ff_);
  std::vector<Index> stack;
  stack.reserve(kmax);

  visit(IndexSet(), ff_);

  auto try_push = [&](Index col) -> bool {
    const auto a = static_cast<Index>(stack.size());
    double ca = c_[col];
    for (Index b = 0; b < a; ++b) {
      double gab = g_(col, stack[static_cast<std::size_t>(b)]);
      for (Index m = 0; m < b; ++m) gab -= l(a, m) * l(b, m);
      l(a, b) = gab / l(b, b);
      ca -= l(a, b) * w[static_cast<std::size_t>(b)];
    }
    const double d2 = g_(col, col) - l.row(a).head(a).squaredNorm();
    if (!(d2 > kMinPivotRel * g_(col, col))) return false;
    l(a, a) = std::sqrt(d2);
    w[static_cast<std::size_t>(a)] = ca / l(a, a);
    r2[static_cast<std::size_t>(a) + 1] = r2[static_cast<std::size_t>(a)] - w[static_cast<std::size_t>(a)] * w[static_cast<std::size_t>(a)];
    stack.push_back(col);
    return true;
  };

  if (kmax == 0) return;
  Index next = 0;
  while (true) {
    if (next < p_ && stack.size() < kmax) {
      const Index col = next++;
      if (try_push(col)) {
        visit(IndexSet(stack), std::max(0.0, r2[stack.size()]));
        if (stack.size() == kmax) {
          next = stack.back() + 1;
          stack.pop_back();
        }
      }
      continue;
    }
    if (stack.empty()) break;
    next = stack.back() + 1;
    stack.pop_back();
  }
}

SubsetSearchResult penalized_subset_search(const DesignMatrix& d, const Vec& f, double per_index_cost,
                                           const SearchCap& cap, std::uint64_t tie_seed) {
  if (!(per_index_cost >= 0.0)) throw std::invalid_argument("penalized_subset_search: cost must be >= 0");
  const SubsetEnumerator en(d.X(), f, cap);

  constexpr double kTieRel = 1e-12;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<IndexSet, double>> ties;
  en.for_each([&](const IndexSet& cols, double r2) {
    const double obj = r2 + per_index_cost * static_cast<double>(cols.size());
    const double slack = std::isfinite(best) ? kTieRel * std::max(1.0, std::abs(best)) : 0.0;
    if (obj < best - slack) {
      best = obj;
      // drop earlier candidates that are no longer within the tie band
      std::erase_if(ties, [&](const auto& t) {
        return t.second + per_index_cost * static_cast<double>(t.first.size()) >
               obj + kTieRel * std::max(1.0, std::abs(obj));
      });
      ties.emplace_back(cols, r2);
    } else if (obj <= best + slack) {
      ties.emplace_back(cols, r2);
    }
  });

  SubsetSearchResult out;
  Rng rng(tie_seed);
  const std::size_t pick = ties.size() > 1 ? static_cast<std::size_t>(rng.below(ties.size())) : 0;
  out.support = ties[pick].first;
  out.residual2 = ties[pick].second;
  out.objective = out.residual2 + per_index_cost * static_cast<double>(out.support.size());
  out.tie_count = ties.size();
  return out;
}

BestSubsetModel best_subset_model(const DesignMatrix& d, const Vec& beta, double sigma,
                                  const SearchCap& cap, std::uint64_t tie_seed) {
  if (beta.size() != d.p()) throw DimensionError("best_subset_model: beta must have p entries");
  if (!(sigma >= 0.0)) throw std::invalid_argument("best_subset_model: sigma must be >= 0");
  const Vec f = d.X() * beta;
  const SubsetSearchResult r = penalized_subset_search(d, f, sigma * sigma, cap, tie_seed);
  BestSubsetModel m;
  m.support = r.support;
  m.beta0 = least_squares(d.X(), r.support, f);
  m.residual_bias = r.residual2;
  m.objective = r.objective;
  return m;
}

}  // namespace lassolab
