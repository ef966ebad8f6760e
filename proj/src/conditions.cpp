#include "lassolab/conditions.hpp"

#include "lassolab/parallel.hpp"
#include "lassolab/rng.hpp"
#include "lassolab/sparse_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace lassolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec sign_vector(std::span<const int> signs, const IndexSet& support) {
  if (signs.size() != support.size()) throw DimensionError("one sign per support index is required");
  Vec s(static_cast<Index>(signs.size()));
  for (std::size_t k = 0; k < signs.size(); ++k) {
    if (signs[k] != 1 && signs[k] != -1) throw std::invalid_argument("signs must be +1 or -1");
    s[static_cast<Index>(k)] = signs[k];
  }
  return s;
}

// Objects shared by the conditions on a fixed support I.
struct SupportAlgebra {
  const DesignMatrix& d;
  const IndexSet& support;
  Mat xi;
  std::optional<SpdFactor> g;

  SupportAlgebra(const DesignMatrix& dm, const IndexSet& sup) : d(dm), support(sup) {
    support.check_bound(d.p());
    xi = submatrix_cols(d.X(), support);
    try {
      g.emplace(xi.transpose() * xi);
    } catch (const SingularMatrixError&) {
      g.reset();
    }
  }

  const SpdFactor& factor() const {
    if (!g) throw SingularMatrixError("X_I^* X_I is singular for I = " + support.to_string());
    return *g;
  }

  // max_{i not in I} |X_i^* w|.
  double off_support_inf(const Vec& w) const {
    const Vec c = d.X().transpose() * w;
    double m = 0.0;
    for (Index i = 0; i < c.size(); ++i) {
      if (!support.contains(i)) m = std::max(m, std::abs(c[i]));
    }
    return m;
  }

  // ||X_{I^c}^* X_I G^{-1} v||_inf.
  double cross_inf(const Vec& v) const {
    if (support.empty()) return 0.0;
    return off_support_inf(xi * factor().solve(v));
  }

  // (Id - P[I]) z through a rank-revealing QR, so it is defined for any I.
  Vec residual_of_projection(const Vec& z) const {
    if (support.empty()) return z;
    Eigen::ColPivHouseholderQR<Mat> qr(xi);
    const Index r = qr.rank();
    const Mat q = qr.householderQ() * Mat::Identity(xi.rows(), r);
    return z - q * (q.transpose() * z);
  }
};

double inverse_gram_norm(const Mat& xi) {
  if (xi.cols() == 0) return 1.0;
  const Eigen::SelfAdjointEigenSolver<Mat> es(xi.transpose() * xi, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > SpdFactor::kMinRcond * std::max(1.0, hi))) return kInf;
  return 1.0 / lo;
}

}  // namespace

ConditionCheck make_check(std::string name, double value, double threshold, bool strict) {
  ConditionCheck c{std::move(name), value, threshold, strict, false};
  c.ok = std::isfinite(value) && (strict ? value < threshold : value <= threshold);
  return c;
}

ConditionCheck invertibility_condition(const DesignMatrix& d, const IndexSet& support) {
  support.check_bound(d.p());
  return make_check("invertibility", inverse_gram_norm(submatrix_cols(d.X(), support)), 2.0);
}

ConditionCheck orthogonality_condition(const DesignMatrix& d, const Vec& z, double lambda_p) {
  if (z.size() != d.n()) throw DimensionError("orthogonality_condition: z must have n entries");
  return make_check("orthogonality", inf_norm(d.X().transpose() * z), std::numbers::sqrt2 * lambda_p);
}

ConditionCheck complementary_size_condition(const DesignMatrix& d, const IndexSet& support,
                                            std::span<const int> signs, const Vec& z, double lambda_p) {
  if (z.size() != d.n()) throw DimensionError("complementary_size_condition: z must have n entries");
  const SupportAlgebra a(d, support);
  const Vec s = sign_vector(signs, support);
  double value = 0.0;
  if (!support.empty()) {
    value = a.cross_inf(a.xi.transpose() * z) + 2.0 * lambda_p * a.cross_inf(s);
  }
  return make_check("complementary_size", value, (2.0 - std::numbers::sqrt2) * lambda_p);
}

ConditionCheck irrepresentable_condition(const DesignMatrix& d, const IndexSet& support,
                                         std::span<const int> signs, double nu) {
  if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("irrepresentable_condition: nu must lie in [0, 1]");
  const SupportAlgebra a(d, support);
  return make_check("irrepresentable", a.cross_inf(sign_vector(signs, support)), 1.0 - nu);
}

std::array<ConditionCheck, 5> thm13_conditions(const DesignMatrix& d, const IndexSet& support,
                                               std::span<const int> signs, const Vec& z, double lambda_p) {
  if (z.size() != d.n()) throw DimensionError("thm13_conditions: z must have n entries");
  const SupportAlgebra a(d, support);
  const Vec s = sign_vector(signs, support);

  double v2 = kInf, v3 = kInf, v5 = kInf;
  if (support.empty()) {
    v2 = v3 = v5 = 0.0;
  } else if (a.g) {
    v2 = a.cross_inf(s);
    v3 = inf_norm(a.g->solve(Vec(a.xi.transpose() * z)));
    v5 = inf_norm(a.g->solve(s));
  }
  const double v4 = a.off_support_inf(a.residual_of_projection(z));

  return {make_check("(i) inverse gram norm", inverse_gram_norm(a.xi), 2.0),
          make_check("(ii) sign cross term", v2, 0.25, true),
          make_check("(iii) noise on support", v3, 2.0 * lambda_p),
          make_check("(iv) residual noise off support", v4, std::numbers::sqrt2 * lambda_p),
          make_check("(v) inverse gram on signs", v5, 3.0)};
}

bool all_ok(std::span<const ConditionCheck> checks) {
  return std::all_of(checks.begin(), checks.end(), [](const ConditionCheck& c) { return c.ok; });
}

ConditionReport condition_report(const DesignMatrix& d, const IndexSet& support, std::span<const int> signs,
                                 const Vec& z, double lambda_p, double nu) {
  ConditionReport r;
  r.invertibility = invertibility_condition(d, support);
  r.orthogonality = orthogonality_condition(d, z, lambda_p);
  try {
    r.complementary_size = complementary_size_condition(d, support, signs, z, lambda_p);
  } catch (const SingularMatrixError&) {
    r.complementary_size = make_check("complementary_size", kInf, (2.0 - std::numbers::sqrt2) * lambda_p);
  }
  try {
    r.irrepresentable = irrepresentable_condition(d, support, signs, nu);
  } catch (const SingularMatrixError&) {
    r.irrepresentable = make_check("irrepresentable", kInf, 1.0 - nu);
  }
  r.thm13 = thm13_conditions(d, support, signs, z, lambda_p);
  return r;
}

AdmissibilityReport admissible_sign_pattern(const DesignMatrix& d, std::span<const int> pattern, double c0) {
  if (static_cast<Index>(pattern.size()) != d.p()) {
    throw DimensionError("admissible_sign_pattern: pattern must have p entries");
  }
  if (!(c0 > 0.0)) throw std::invalid_argument("admissible_sign_pattern: c0 must be positive");
  std::vector<Index> idx;
  std::vector<int> signs;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] < -1 || pattern[i] > 1) throw std::invalid_argument("pattern entries must be -1, 0 or 1");
    if (pattern[i] != 0) {
      idx.push_back(static_cast<Index>(i));
      signs.push_back(pattern[i]);
    }
  }
  const IndexSet support(std::move(idx));
  const SupportAlgebra a(d, support);
  const double thr3 = c0 / std::sqrt(std::log(static_cast<double>(d.p())));

  AdmissibilityReport r;
  r.cond1 = make_check("invertibility", inverse_gram_norm(a.xi), 2.0);
  if (support.empty()) {
    r.cond2 = make_check("sign cross term", 0.0, 0.25);
    r.cond3 = make_check("projection of outside columns", 0.0, thr3);
  } else if (!a.g) {
    r.cond2 = make_check("sign cross term", kInf, 0.25);
    r.cond3 = make_check("projection of outside columns", kInf, thr3);
  } else {
    r.cond2 = make_check("sign cross term", a.cross_inf(sign_vector(signs, support)), 0.25);
    // ||X_I G^{-1} X_I^* X_i||^2 = m_i^* G^{-1} m_i with m_i = X_I^* X_i.
    const Mat m = a.xi.transpose() * d.X();
    const Mat gm = a.g->solve(m);
    double worst = 0.0;
    for (Index i = 0; i < d.p(); ++i) {
      if (!support.contains(i)) worst = std::max(worst, m.col(i).dot(gm.col(i)));
    }
    r.cond3 = make_check("projection of outside columns", std::sqrt(std::max(0.0, worst)), thr3);
  }
  r.admissible = r.cond1.ok && r.cond2.ok && r.cond3.ok;
  return r;
}

double lemma36_statistic(const DesignMatrix& d, const IndexSet& support, Index i) {
  support.check_bound(d.p());
  if (i < 0 || i >= d.p()) throw std::out_of_range("lemma36_statistic: column index out of range");
  double sum = 0.0;
  for (Index j : support) {
    if (j == i) continue;
    const double ip = d.column(i).dot(d.column(j));
    sum += ip * ip;
  }
  return sum;
}

TailCheck make_tail_check(double t, std::size_t exceed, std::size_t trials, double bound) {
  if (trials == 0) throw std::invalid_argument("tail check needs at least one trial");
  TailCheck c;
  c.t = t;
  c.exceed = exceed;
  c.trials = trials;
  c.empirical = static_cast<double>(exceed) / static_cast<double>(trials);
  c.bound = bound;
  const double b = std::clamp(bound, 0.0, 1.0);
  c.std_error = std::sqrt(b * (1.0 - b) / static_cast<double>(trials));
  c.ok = c.empirical <= bound + 3.0 * c.std_error;
  return c;
}

namespace {

std::size_t count_true(const std::vector<char>& flags) {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), char{1}));
}

}  // namespace

TailCheck correlation_tail_check(const DesignMatrix& d, double t, std::size_t trials, std::uint64_t seed) {
  if (!(t > 0.0)) throw std::invalid_argument("correlation_tail_check: t must be positive");
  std::vector<char> hit(trials, 0);
  parallel_for(trials, [&](std::size_t k) {
    Rng rng(derive_seed(seed, k));
    Vec z(d.n());
    for (Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    hit[k] = inf_norm(d.X().transpose() * z) > t ? 1 : 0;
  });
  const double phi = std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
  const double bound = std::min(1.0, 2.0 * static_cast<double>(d.p()) * phi / t);
  return make_tail_check(t, count_true(hit), trials, bound);
}

TailCheck lemma36_tail_check(const DesignMatrix& d, Index s, Index column, std::size_t trials,
                             std::uint64_t seed, std::optional<double> t) {
  if (s < 1 || s > d.p()) throw std::invalid_argument("lemma36_tail_check: need 1 <= S <= p");
  if (column < 0 || column >= d.p()) throw std::out_of_range("lemma36_tail_check: column out of range");
  const double logp = std::log(static_cast<double>(d.p()));
  const double tt = t.value_or(1.0 / (8.0 * logp));
  if (!(tt > 0.0)) throw std::invalid_argument("lemma36_tail_check: t must be positive");
  const double mean_cap = static_cast<double>(s) * d.opnorm() * d.opnorm() / static_cast<double>(d.p());
  const double level = mean_cap + tt;

  std::vector<char> hit(trials, 0);
  parallel_for(trials, [&](std::size_t k) {
    Rng rng(derive_seed(seed, k));
    hit[k] = lemma36_statistic(d, sample_support(d.p(), s, rng), column) > level ? 1 : 0;
  });
  const double mu = d.coherence();
  // Orthogonal columns make the statistic identically 0, below the level.
  const double bound =
      mu > 0.0 ? std::min(1.0, 2.0 * std::exp(-tt * tt / (2.0 * mu * mu * (mean_cap + tt / 3.0)))) : 0.0;
  return make_tail_check(tt, count_true(hit), trials, bound);
}

TroppEstimate tropp_moment_estimate(const DesignMatrix& d, Index s, std::size_t trials, std::uint64_t seed,
                                    std::optional<double> q) {
  if (s < 0 || s > d.p()) throw std::invalid_argument("tropp_moment_estimate: need 0 <= S <= p");
  if (trials == 0) throw std::invalid_argument("tropp_moment_estimate: need at least one trial");
  const double p = static_cast<double>(d.p());
  const double logp = std::log(p);
  const double nrm2 = d.opnorm() * d.opnorm();
  const double load = static_cast<double>(s) * nrm2 / p;
  if (load > 0.25) {
    throw std::invalid_argument("tropp_moment_estimate: hypothesis S ||X||^2 / p <= 1/4 violated (S ||X||^2 / p = " +
                                format_double(load) + ")");
  }
  TroppEstimate e;
  e.q = q.value_or(2.0 * logp);
  if (!(e.q >= 1.0)) throw std::invalid_argument("tropp_moment_estimate: q must be >= 1");
  e.trials = trials;
  const double mu = d.coherence();
  e.bound = 30.0 * mu * logp + 13.0 * std::sqrt(2.0 * load * logp);
  e.companion_bound = 4.0 * mu * std::sqrt(logp) + std::sqrt(load);

  const double keep = static_cast<double>(s) / p;
  std::vector<double> zq(trials, 0.0), cq(trials, 0.0), sizes(trials, 0.0);
  parallel_for(trials, [&](std::size_t k) {
    Rng rng(derive_seed(seed, k));
    std::vector<Index> idx;
    for (Index j = 0; j < d.p(); ++j) {
      if (rng.bernoulli(keep)) idx.push_back(j);
    }
    const IndexSet support(std::move(idx));
    sizes[k] = static_cast<double>(support.size());
    if (support.empty()) return;
    const Mat xi = submatrix_cols(d.X(), support);
    const Mat h = xi.transpose() * xi - Mat::Identity(xi.cols(), xi.cols());
    const Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
    const double z = es.eigenvalues().cwiseAbs().maxCoeff();
    const Mat m = xi.transpose() * d.X();
    double c = 0.0;
    for (Index i = 0; i < d.p(); ++i) {
      if (!support.contains(i)) c = std::max(c, m.col(i).norm());
    }
    zq[k] = std::pow(z, e.q);
    cq[k] = std::pow(c, e.q);
  });
  const double nt = static_cast<double>(trials);
  double sz = 0.0, sc = 0.0, ss = 0.0;
  for (std::size_t k = 0; k < trials; ++k) {
    sz += zq[k];
    sc += cq[k];
    ss += sizes[k];
  }
  e.empirical_q_norm = std::pow(sz / nt, 1.0 / e.q);
  e.companion_q_norm = std::pow(sc / nt, 1.0 / e.q);
  e.mean_support_size = ss / nt;
  return e;
}

MaximaTailTable hoeffding_maxima_check(const Mat& w, std::span<const double> t_grid, std::size_t trials,
                                       std::uint64_t seed, MaximaNoise noise, std::optional<double> kappa) {
  if (w.cols() < 1) throw std::invalid_argument("hoeffding_maxima_check: need at least one vector");
  if (t_grid.empty()) throw std::invalid_argument("hoeffding_maxima_check: empty t grid");
  require_finite(w, "hoeffding_maxima_check");
  const double max_norm = w.colwise().norm().maxCoeff();
  MaximaTailTable table;
  table.kappa = kappa.value_or(max_norm);
  if (table.kappa < max_norm) {
    throw std::invalid_argument("hoeffding_maxima_check: kappa must be >= max_j ||W_j||");
  }
  table.count = static_cast<std::size_t>(w.cols());
  table.noise = noise;

  std::vector<double> zmax(trials, 0.0);
  parallel_for(trials, [&](std::size_t k) {
    Rng rng(derive_seed(seed, k));
    Vec s(w.rows());
    for (Index i = 0; i < s.size(); ++i) {
      s[i] = noise == MaximaNoise::signs ? static_cast<double>(rng.sign()) : rng.normal();
    }
    zmax[k] = inf_norm(w.transpose() * s);
  });

  table.ok = true;
  for (double t : t_grid) {
    const auto exceed =
        static_cast<std::size_t>(std::count_if(zmax.begin(), zmax.end(), [t](double z) { return z >= t; }));
    double bound = 1.0;
    if (table.kappa > 0.0) {
      bound = std::min(1.0, 2.0 * static_cast<double>(table.count) *
                                std::exp(-t * t / (2.0 * table.kappa * table.kappa)));
    } else if (t > 0.0) {
      bound = 0.0;
    }
    table.rows.push_back(make_tail_check(t, exceed, trials, bound));
    table.ok = table.ok && table.rows.back().ok;
  }
  return table;
}

}  // namespace lassolab
