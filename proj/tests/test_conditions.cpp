#include "lassolab/conditions.hpp"
#include "lassolab/lasso.hpp"
#include "lassolab/sparse_models.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace lassolab;

namespace {

std::vector<int> random_signs(std::size_t k, Rng& rng) {
  std::vector<int> s(k);
  for (auto& v : s) v = rng.sign();
  return s;
}

void check_flag(const ConditionCheck& c) {
  CAPTURE(c.name);
  const bool expect = std::isfinite(c.value) && (c.strict ? c.value < c.threshold : c.value <= c.threshold);
  CHECK(c.ok == expect);
}

}  // namespace

TEST_CASE("make_check") {
  CHECK(make_check("a", 2.0, 2.0).ok);
  CHECK_FALSE(make_check("a", 2.0, 2.0, true).ok);
  CHECK_FALSE(make_check("a", std::numeric_limits<double>::infinity(), 1e300).ok);
  CHECK_FALSE(make_check("a", std::numeric_limits<double>::quiet_NaN(), 1.0).ok);
}

TEST_CASE("invertibility_condition") {
  Rng rng(1);
  const DesignMatrix q = normalize_columns(oracle::random_orthonormal(6, rng));
  const auto c = invertibility_condition(q, IndexSet{0, 3, 4});
  CHECK(c.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.ok);

  const DesignMatrix block = coherent_block_design(4, 0.1);
  const auto b = invertibility_condition(block, IndexSet{0, 1});
  CHECK(b.value == doctest::Approx(10.0).epsilon(1e-10));
  CHECK_FALSE(b.ok);

  Mat x = oracle::random_matrix(5, 3, rng);
  x.col(2) = x.col(0);
  const auto s = invertibility_condition(normalize_columns(x), IndexSet{0, 2});
  CHECK(std::isinf(s.value));
  CHECK_FALSE(s.ok);
  CHECK(invertibility_condition(q, IndexSet()).value == 1.0);
}

TEST_CASE("invertibility value is the reciprocal smallest eigenvalue") {
  Rng rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const Index n = 6 + static_cast<Index>(rng.below(20));
    const Index p = 3 + static_cast<Index>(rng.below(20));
    const DesignMatrix d = gaussian_design(n, p, rng.engine()());
    const IndexSet s = oracle::random_subset(p, 1 + static_cast<Index>(rng.below(std::min<Index>(p, n / 2))), rng);
    const double expect = 1.0 / oracle::smallest_eigenvalue(gram(d.X(), s));
    CHECK(std::abs(invertibility_condition(d, s).value - expect) <= 1e-8 * expect);
  }
}

TEST_CASE("invertibility holds on most supports of a Gaussian design") {
  const DesignMatrix d = gaussian_design(128, 256, 3);
  Rng rng(3);
  int ok = 0;
  for (int k = 0; k < 500; ++k) ok += invertibility_condition(d, oracle::random_subset(256, 10, rng)).ok;
  CHECK(ok >= 475);
}

TEST_CASE("orthogonality_condition") {
  const DesignMatrix d = gaussian_design(50, 80, 4);
  const double lp = lambda_p(80);
  const auto zero = orthogonality_condition(d, Vec::Zero(50), lp);
  CHECK(zero.value == 0.0);
  CHECK(zero.ok);
  CHECK(zero.threshold == doctest::Approx(std::sqrt(2.0) * lp));

  Rng rng(4);
  const Vec z = oracle::random_vector(50, rng);
  CHECK(orthogonality_condition(d, 3.0 * z, lp).value ==
        doctest::Approx(3.0 * orthogonality_condition(d, z, lp).value).epsilon(1e-14));
  CHECK_THROWS_AS(orthogonality_condition(d, Vec::Zero(49), lp), DimensionError);
}

TEST_CASE("orthogonality failure rate") {
  const Index n = 128, p = 256;
  const DesignMatrix d = gaussian_design(n, p, 5);
  const double lp = lambda_p(p);
  const int trials = 4000;
  int fail = 0;
  for (int k = 0; k < trials; ++k) {
    Rng rng(derive_seed(6, k));
    fail += !orthogonality_condition(d, oracle::random_vector(n, rng), lp).ok;
  }
  const double rate = 1.0 / (p * std::sqrt(2 * std::numbers::pi * std::log(double(p))));
  CHECK(fail / double(trials) <= rate + 3 * std::sqrt(rate * (1 - rate) / trials));
}

TEST_CASE("complementary size and irrepresentable on orthogonal blocks") {
  Rng rng(7);
  const DesignMatrix q = normalize_columns(oracle::random_orthonormal(8, rng));
  const IndexSet s{2, 5};
  const std::vector<int> signs{1, -1};
  const auto c = complementary_size_condition(q, s, signs, oracle::random_vector(8, rng), 2.0);
  CHECK(c.value <= 1e-12);
  CHECK(c.ok);
  CHECK(irrepresentable_condition(q, s, signs).value <= 1e-12);

  const DesignMatrix pair = coherent_block_design(2, 0.2);
  const auto ir = irrepresentable_condition(pair, IndexSet{0}, std::vector<int>{1});
  CHECK(ir.value == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_FALSE(ir.ok);
  CHECK(ir.threshold == 0.25);

  Mat x = oracle::random_matrix(5, 3, rng);
  x.col(2) = x.col(0);
  const DesignMatrix dup = normalize_columns(x);
  CHECK_THROWS_AS(irrepresentable_condition(dup, IndexSet{0, 2}, std::vector<int>{1, 1}), SingularMatrixError);
  CHECK_THROWS_AS(complementary_size_condition(dup, IndexSet{0, 2}, std::vector<int>{1, 1}, Vec::Zero(5), 1.0),
                  SingularMatrixError);
  CHECK_THROWS_AS(irrepresentable_condition(q, s, std::vector<int>{1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(irrepresentable_condition(q, s, std::vector<int>{1}), DimensionError);
}

TEST_CASE("complementary size fails on the spike support of the counterexample") {
  const Index n = 256;
  const DesignMatrix d = counterexample_dictionary(n);
  const IndexSet spikes = IndexSet::range(n);
  const std::vector<int> signs(n, 1);
  Rng rng(8);
  const auto c = complementary_size_condition(d, spikes, signs, oracle::random_vector(n, rng), lambda_p(d.p()));
  CHECK_FALSE(c.ok);
  // The sign term vanishes: the constant vector is orthogonal to every remaining sinusoid.
  const auto zero_noise = complementary_size_condition(d, spikes, signs, Vec::Zero(n), lambda_p(d.p()));
  CHECK(zero_noise.value <= 1e-10);
}

TEST_CASE("thm13_conditions") {
  Rng rng(9);
  const DesignMatrix q = normalize_columns(oracle::random_orthonormal(7, rng));
  const auto c = thm13_conditions(q, IndexSet{1, 4}, std::vector<int>{-1, 1}, Vec::Zero(7), 2.0);
  const double expect[] = {1, 0, 0, 0, 1};
  for (int k = 0; k < 5; ++k) {
    CHECK(std::abs(c[k].value - expect[k]) <= 1e-12);
    CHECK(c[k].ok);
  }
  CHECK(all_ok(c));

  Mat x = oracle::random_matrix(6, 4, rng);
  x.col(3) = x.col(1);
  const auto s = thm13_conditions(normalize_columns(x), IndexSet{1, 3}, std::vector<int>{1, 1},
                                  oracle::random_vector(6, rng), 2.0);
  CHECK(std::isinf(s[0].value));
  CHECK(std::isinf(s[1].value));
  CHECK(std::isinf(s[2].value));
  CHECK(std::isfinite(s[3].value));
  CHECK(std::isinf(s[4].value));
  CHECK_FALSE(all_ok(s));
}

TEST_CASE("condition_report flags equal their inequalities") {
  Rng rng(10);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 5 + static_cast<Index>(rng.below(30));
    const Index p = 3 + static_cast<Index>(rng.below(30));
    Mat x = oracle::random_matrix(n, p, rng);
    const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(std::min(n, p))));
    const IndexSet s = oracle::random_subset(p, k, rng);
    if (rep % 5 == 0 && k >= 2) x.col(s[1]) = x.col(s[0]);
    const DesignMatrix d = normalize_columns(x);
    const Vec z = oracle::random_vector(n, rng);
    const auto r = condition_report(d, s, random_signs(s.size(), rng), z, lambda_p(std::max<Index>(p, 2)));
    check_flag(r.invertibility);
    check_flag(r.orthogonality);
    check_flag(r.complementary_size);
    check_flag(r.irrepresentable);
    for (const auto& c : r.thm13) check_flag(c);
    CHECK(r.thm13[1].strict);
  }
}

TEST_CASE("conditions in the sparse regime of a tall Gaussian design") {
  const Index n = 1024, p = 512, s = 3;
  const DesignMatrix d = gaussian_design(n, p, 11);
  const double lp = lambda_p(p);
  int comp = 0, irr = 0, all5 = 0;
  const int trials = 500;
  for (int k = 0; k < trials; ++k) {
    Rng rng(derive_seed(12, k));
    const IndexSet sup = oracle::random_subset(p, s, rng);
    const auto signs = random_signs(s, rng);
    const Vec z = oracle::random_vector(n, rng);
    comp += complementary_size_condition(d, sup, signs, z, lp).ok;
    irr += irrepresentable_condition(d, sup, signs).ok;
    all5 += all_ok(thm13_conditions(d, sup, signs, z, lp));
  }
  CHECK(comp >= trials * 95 / 100);
  CHECK(irr >= trials * 95 / 100);
  CHECK(all5 >= trials * 90 / 100);
}

TEST_CASE("when the five conditions hold the lasso recovers support and signs") {
  const Index n = 1024, p = 512, s = 3;
  const DesignMatrix d = gaussian_design(n, p, 13);
  const double lp = lambda_p(p);
  int qualifying = 0;
  for (int k = 0; k < 60; ++k) {
    const SparseModel m =
        sample_generic_sparse(p, s, AmplitudeRule::recovery_threshold(1.0, p, 1.01), derive_seed(14, k));
    const Observation o = observe(d, m.beta, 1.0, derive_seed(15, k));
    if (!all_ok(thm13_conditions(d, m.support, m.signs, o.z, lp))) continue;
    ++qualifying;
    const LassoSolution sol = solve(LassoProblem(d, o.y, 2 * lp, 1.0));
    CHECK(sol.support == m.support);
    for (std::size_t j = 0; j < m.support.size(); ++j) CHECK(sol.beta_hat[m.support[j]] * m.signs[j] > 0);
    const Vec h = closed_form_on_support(d, m.support, m.signs, o.z, lp);
    CHECK((sol.beta_hat - (m.beta + h)).lpNorm<Eigen::Infinity>() <= 1e-6);
    // (iii) and (v) give ||h_I||_inf <= 2 lambda_p + 2 lambda_p * 3.
    CHECK(h.lpNorm<Eigen::Infinity>() <= 8 * lp);
  }
  CHECK(qualifying > 40);
}

TEST_CASE("admissible_sign_pattern") {
  Rng rng(16);
  const DesignMatrix q = normalize_columns(oracle::random_orthonormal(6, rng));
  const std::vector<int> pat{1, 0, -1, 0, 0, 1};
  const auto r = admissible_sign_pattern(q, pat);
  CHECK(r.cond1.value == doctest::Approx(1.0));
  CHECK(r.cond2.value <= 1e-12);
  CHECK(r.cond3.value <= 1e-7);
  CHECK(r.admissible);

  const auto z = admissible_sign_pattern(q, std::vector<int>(6, 0));
  CHECK(z.cond1.value == 1.0);
  CHECK(z.cond2.value == 0.0);
  CHECK(z.cond3.value == 0.0);
  CHECK(z.admissible);

  CHECK_THROWS_AS(admissible_sign_pattern(q, std::vector<int>(5, 0)), DimensionError);
  CHECK_THROWS_AS(admissible_sign_pattern(q, std::vector<int>{2, 0, 0, 0, 0, 0}), std::invalid_argument);

  // cond3 against a direct projector evaluation.
  const DesignMatrix g = gaussian_design(30, 12, 17);
  const std::vector<int> gp{0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, 0};
  const auto gr = admissible_sign_pattern(g, gp);
  const IndexSet I{1, 4, 8};
  double worst = 0.0;
  for (Index i = 0; i < 12; ++i) {
    if (!I.contains(i)) worst = std::max(worst, projector_apply(g.X(), I, g.X().col(i)).norm());
  }
  CHECK(gr.cond3.value == doctest::Approx(worst).epsilon(1e-10));
  CHECK(gr.cond3.threshold == doctest::Approx(0.125 / std::sqrt(std::log(12.0))));
  CHECK(gr.admissible == (gr.cond1.ok && gr.cond2.ok && gr.cond3.ok));
}

TEST_CASE("most sparse sign patterns are admissible for a tall Gaussian design") {
  const Index n = 8192, p = 256, s = 2;
  const DesignMatrix d = gaussian_design(n, p, 18);
  Rng rng(19);
  int ok = 0;
  const int patterns = 1000;
  for (int k = 0; k < patterns; ++k) {
    std::vector<int> pat(p, 0);
    for (Index i : oracle::random_subset(p, s, rng)) pat[static_cast<std::size_t>(i)] = rng.sign();
    ok += admissible_sign_pattern(d, pat).admissible;
  }
  CHECK(ok >= patterns - 4 * patterns / p);
}

TEST_CASE("lemma36_statistic") {
  Rng rng(20);
  const DesignMatrix q = normalize_columns(oracle::random_orthonormal(6, rng));
  CHECK(lemma36_statistic(q, IndexSet{0, 2, 3}, 1) <= 1e-24);
  const DesignMatrix g = gaussian_design(10, 8, 21);
  const double ip = g.X().col(2).dot(g.X().col(5));
  CHECK(lemma36_statistic(g, IndexSet{5}, 2) == doctest::Approx(ip * ip));
  CHECK(lemma36_statistic(g, IndexSet{2}, 2) == 0.0);
  CHECK_THROWS_AS(lemma36_statistic(g, IndexSet{2}, 8), std::out_of_range);
}

TEST_CASE("tail checks") {
  const auto c = make_tail_check(1.0, 10, 100, 0.05);
  CHECK(c.empirical == 0.1);
  CHECK(c.std_error == doctest::Approx(std::sqrt(0.05 * 0.95 / 100)));
  CHECK(c.ok == (0.1 <= 0.05 + 3 * c.std_error));
  CHECK_THROWS_AS(make_tail_check(1.0, 0, 0, 0.1), std::invalid_argument);

  const DesignMatrix d = gaussian_design(128, 256, 22);
  const auto corr = correlation_tail_check(d, lambda_p(256), 3000, 23);
  CHECK(corr.ok);
  const auto l36 = lemma36_tail_check(d, 5, 0, 3000, 24);
  CHECK(l36.t == doctest::Approx(1.0 / (8 * std::log(256.0))));
  CHECK(l36.ok);
  const DesignMatrix id = normalize_columns(Mat::Identity(16, 16));
  const auto zero = lemma36_tail_check(id, 4, 0, 100, 25);
  CHECK(zero.exceed == 0);
  CHECK(zero.bound == 0.0);
}

TEST_CASE("moment estimates over Bernoulli supports") {
  const DesignMatrix d = gaussian_design(128, 256, 26);
  const auto zero = tropp_moment_estimate(d, 0, 10, 27);
  CHECK(zero.empirical_q_norm == 0.0);
  CHECK(zero.companion_q_norm == 0.0);

  const auto e = tropp_moment_estimate(d, 8, 300, 28);
  CHECK(e.q == doctest::Approx(2 * std::log(256.0)));
  CHECK(e.empirical_q_norm <= e.bound);
  CHECK(e.companion_q_norm <= e.companion_bound);
  CHECK(std::abs(e.mean_support_size - 8.0) <= 1.0);
  CHECK_THROWS_AS(tropp_moment_estimate(d, 16, 10, 29), std::invalid_argument);
}

TEST_CASE("maxima of sign and Gaussian sums") {
  const Index n = 100;
  const Mat w = Mat::Constant(n, 1, 1.0 / std::sqrt(double(n)));
  const double grid[] = {3.0};
  const auto t = hoeffding_maxima_check(w, grid, 20000, 30);
  CHECK(t.kappa == doctest::Approx(1.0));
  CHECK(t.rows[0].bound == doctest::Approx(2 * std::exp(-4.5)));
  CHECK(t.ok);

  const auto zero = hoeffding_maxima_check(Mat::Zero(5, 3), grid, 100, 31);
  CHECK(zero.rows[0].exceed == 0);
  CHECK(zero.ok);

  // Gaussian noise, |J| = 1: Z = |N(0, 1)|.
  const double grid2[] = {0.5, 1.0, 1.5, 2.0, 2.5};
  const int trials = 20000;
  const auto g = hoeffding_maxima_check(w, grid2, trials, 32, MaximaNoise::gaussian);
  CHECK(g.ok);
  for (const auto& row : g.rows) {
    const double exact = oracle::normal_two_sided_tail(row.t);
    CHECK(std::abs(row.empirical - exact) <= 4 * std::sqrt(exact * (1 - exact) / trials));
  }

  CHECK_THROWS_AS(hoeffding_maxima_check(w, grid, 10, 33, MaximaNoise::signs, 0.5), std::invalid_argument);
}
