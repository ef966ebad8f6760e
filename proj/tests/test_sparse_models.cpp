#include "lassolab/sparse_models.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace lassolab;

TEST_CASE("sample_generic_sparse") {
  const SparseModel all = sample_generic_sparse(6, 6, AmplitudeRule::constant(1.0), 3);
  CHECK(all.support == IndexSet::range(6));

  const SparseModel a = sample_generic_sparse(50, 7, AmplitudeRule::constant(2.5), 9);
  const SparseModel b = sample_generic_sparse(50, 7, AmplitudeRule::constant(2.5), 9);
  CHECK(a.support == b.support);
  CHECK(a.beta == b.beta);
  CHECK(a.signs == b.signs);

  CHECK_THROWS_AS(sample_generic_sparse(5, 6, AmplitudeRule::constant(1.0), 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_generic_sparse(5, 0, AmplitudeRule::constant(1.0), 1), std::invalid_argument);
  CHECK_THROWS_AS(AmplitudeRule::constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_generic_sparse(5, 2, AmplitudeRule::custom([](Rng&) { return -1.0; }), 1),
                  std::invalid_argument);
}

TEST_CASE("generic sparse model invariants over many seeds") {
  Rng meta(17);
  for (int rep = 0; rep < 300; ++rep) {
    const Index p = 1 + static_cast<Index>(meta.below(40));
    const Index s = 1 + static_cast<Index>(meta.below(static_cast<std::uint64_t>(p)));
    const auto rule = AmplitudeRule::custom([](Rng& r) { return 0.5 + r.uniform(); });
    const SparseModel m = sample_generic_sparse(p, s, rule, meta.engine()());
    REQUIRE(static_cast<Index>(m.support.size()) == s);
    std::set<Index> uniq(m.support.begin(), m.support.end());
    CHECK(static_cast<Index>(uniq.size()) == s);
    for (std::size_t k = 0; k < m.support.size(); ++k) {
      CHECK(m.amplitudes[k] > 0.0);
      CHECK(m.beta[m.support[k]] == m.signs[k] * m.amplitudes[k]);
    }
    for (Index i = 0; i < p; ++i) {
      if (!m.support.contains(i)) CHECK(m.beta[i] == 0.0);
    }
  }
}

TEST_CASE("generic sparse model frequencies") {
  const Index p = 10, s = 3;
  const int draws = 20000;
  std::vector<int> hits(p, 0);
  std::vector<double> sign_sum(p, 0.0);
  for (int k = 0; k < draws; ++k) {
    const SparseModel m = sample_generic_sparse(p, s, AmplitudeRule::constant(1.0), derive_seed(99, k));
    for (std::size_t j = 0; j < m.support.size(); ++j) {
      ++hits[m.support[j]];
      sign_sum[m.support[j]] += m.signs[j];
    }
  }
  for (Index i = 0; i < p; ++i) {
    CHECK(std::abs(hits[i] / double(draws) - 0.3) <= 0.02);
    CHECK(std::abs(sign_sum[i] / hits[i]) <= 0.03);
  }
}

TEST_CASE("recovery threshold amplitude rule") {
  Rng rng(1);
  const auto rule = AmplitudeRule::recovery_threshold(2.0, 256, 1.01);
  CHECK(rule(rng) == doctest::Approx(1.01 * 8 * 2.0 * std::sqrt(2 * std::log(256.0))).epsilon(1e-14));
  CHECK_THROWS_AS(AmplitudeRule::recovery_threshold(0.0, 256), std::invalid_argument);
}

TEST_CASE("sample_blockwise_beta") {
  const SparseModel m = sample_blockwise_beta(400, 0.1, 4);
  for (Index i : m.support) CHECK(std::abs(m.beta[i]) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK_THROWS_AS(sample_blockwise_beta(2, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_blockwise_beta(10, 1.0, 1), std::invalid_argument);

  const Index n = 100;
  const int draws = 10000;
  double size_sum = 0.0;
  int blowup = 0;
  for (int k = 0; k < draws; ++k) {
    const SparseModel b = sample_blockwise_beta(n, 0.01, derive_seed(5, k));
    size_sum += static_cast<double>(b.support.size());
    if (b.beta[0] != 0.0 && b.beta[0] == -b.beta[1]) ++blowup;
  }
  // Support size is Binomial(n, 2/sqrt n): mean 20, sd ~4, se of the mean ~0.04.
  CHECK(std::abs(size_sum / draws - 20.0) <= 1.0);
  // A fixed block equals +-(1, -1)/eps with probability 2 q^2 = 2/n.
  const double q = 2.0 / n;
  CHECK(std::abs(blowup / double(draws) - q) <= 3.0 * std::sqrt(q * (1 - q) / draws));
}

TEST_CASE("observe") {
  const DesignMatrix d = gaussian_design(20, 30, 1);
  const SparseModel m = sample_generic_sparse(30, 4, AmplitudeRule::constant(1.5), 2);
  const Observation o0 = observe(d, m.beta, 0.0, 3);
  CHECK(o0.y == d.X() * m.beta);
  const Observation a = observe(d, m.beta, 1.0, 3);
  const Observation b = observe(d, m.beta, 1.0, 3);
  CHECK(a.y == b.y);
  CHECK((a.y - d.X() * m.beta - a.z).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK_THROWS_AS(observe(d, Vec::Zero(29), 1.0, 1), DimensionError);
  CHECK_THROWS_AS(observe(d, m.beta, -1.0, 1), std::invalid_argument);
}

TEST_CASE("observed noise respects the Gaussian correlation tail bound") {
  const Index n = 64, p = 128;
  const DesignMatrix d = gaussian_design(n, p, 21);
  const double t = std::sqrt(2.0 * std::log(double(p)));
  const int trials = 50000;
  int exceed = 0;
  const Vec zero = Vec::Zero(p);
  for (int k = 0; k < trials; ++k) {
    const Observation o = observe(d, zero, 1.0, derive_seed(31, k));
    if ((d.X().transpose() * o.z).lpNorm<Eigen::Infinity>() > t) ++exceed;
  }
  const double bound = 2.0 * p * oracle::normal_density(t) / t;
  const double b = std::min(1.0, bound);
  CHECK(exceed / double(trials) <= b + 3.0 * std::sqrt(b * (1 - b) / trials));
}

TEST_CASE("SearchCap") {
  CHECK(SearchCap{}.resolve(20) == 20);
  CHECK(SearchCap{3}.resolve(10) == 3);
  CHECK(SearchCap{3}.resolve(500) == 3);
  CHECK_THROWS_AS(SearchCap{}.resolve(21), ExhaustiveSearchRefused);
  CHECK_THROWS_AS(SearchCap{4}.resolve(21), ExhaustiveSearchRefused);
  CHECK_THROWS_AS(SearchCap{-1}.resolve(5), std::invalid_argument);
}

TEST_CASE("SubsetEnumerator visits each subset once with the right residual") {
  Rng rng(3);
  const Mat x = oracle::random_matrix(6, 5, rng);
  const Vec f = oracle::random_vector(6, rng);
  const SubsetEnumerator en(x, f, {});
  int count = 0;
  std::set<std::vector<Index>> seen;
  en.for_each([&](const IndexSet& s, double r2) {
    ++count;
    seen.insert(s.indices());
    CHECK(std::abs(r2 - oracle::qr_residual2(x, s.indices(), f)) <= 1e-10 * (1 + f.squaredNorm()));
  });
  CHECK(count == 32);
  CHECK(seen.size() == 32);

  Mat dup = x;
  dup.col(2) = dup.col(0);
  CHECK_THROWS_AS(SubsetEnumerator(dup, f, {}).residual2(IndexSet{0, 2}), SingularMatrixError);
  int visited = 0;
  SubsetEnumerator(dup, f, {}).for_each([&](const IndexSet& s, double) {
    ++visited;
    CHECK_FALSE((s.contains(0) && s.contains(2)));
  });
  CHECK(visited == 24);
}

TEST_CASE("best_subset_model") {
  const DesignMatrix d = gaussian_design(40, 10, 8);
  Vec beta = Vec::Zero(10);
  beta[2] = 3.0;
  beta[7] = -2.0;
  const BestSubsetModel m = best_subset_model(d, beta, 0.01);
  CHECK(m.support == IndexSet{2, 7});
  CHECK(m.residual_bias <= 1e-10);

  const BestSubsetModel z = best_subset_model(d, Vec::Zero(10), 1.0);
  CHECK(z.support.empty());
  CHECK(z.objective == 0.0);

  CHECK_THROWS_AS(best_subset_model(gaussian_design(10, 25, 1), Vec::Zero(25), 1.0), ExhaustiveSearchRefused);
}

TEST_CASE("best_subset_model matches brute-force enumeration") {
  Rng meta(23);
  for (int rep = 0; rep < 40; ++rep) {
    const Index n = 4 + static_cast<Index>(meta.below(10));
    const Index p = 3 + static_cast<Index>(meta.below(8));
    const DesignMatrix d = gaussian_design(n, p, meta.engine()());
    const Vec beta = oracle::random_vector(p, meta) * 2.0;
    const double sigma = 0.2 + meta.uniform() * 2.0;
    const BestSubsetModel m = best_subset_model(d, beta, sigma);
    const Vec f = d.X() * beta;
    const auto o = oracle::enumerate_subsets(d.X(), f, sigma * sigma);
    CHECK(std::abs(m.objective - o.value) <= 1e-9 * (1 + o.value));
    // X beta0 is the projection of X beta on I0.
    CHECK((d.X() * m.beta0 - projector_apply(d.X(), m.support, f)).norm() <= 1e-10 * (1 + f.norm()));
    // Minimality against every subset.
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << p); ++mask) {
      const auto idx = oracle::mask_indices(mask, p);
      const double v = oracle::qr_residual2(d.X(), idx, f) + sigma * sigma * static_cast<double>(idx.size());
      CHECK(m.objective <= v + 1e-9 * (1 + v));
    }
  }
}

TEST_CASE("ties are broken at random but reproducibly") {
  // Two identical columns: {0} and {1} tie exactly.
  Mat x = Mat::Zero(3, 2);
  x(0, 0) = 1;
  x(0, 1) = 1;
  const DesignMatrix d = normalize_columns(x);
  const Vec f = (Vec(3) << 2, 0, 0).finished();
  std::set<Index> picked;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto r = penalized_subset_search(d, f, 0.5, {}, seed);
    CHECK(r.tie_count == 2);
    REQUIRE(r.support.size() == 1);
    picked.insert(r.support[0]);
    CHECK(penalized_subset_search(d, f, 0.5, {}, seed).support == r.support);
  }
  CHECK(picked.size() == 2);
}
