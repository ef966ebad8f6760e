#include "lassolab/dictionaries.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace lassolab;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("lassolab_test_" + name);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

void check_unit_columns_and_coherence(const DesignMatrix& d) {
  for (Index j = 0; j < d.p(); ++j) CHECK(std::abs(d.X().col(j).norm() - 1.0) <= 1e-10);
  CHECK(std::abs(d.coherence() - oracle::naive_coherence(d.X())) <= 1e-12);
}

}  // namespace

TEST_CASE("normalize_columns") {
  const Mat q = Mat::Identity(4, 4);
  const DesignMatrix d = normalize_columns(q);
  CHECK(d.X() == q);
  CHECK_FALSE(d.normalization_changed());

  Rng rng(1);
  const Mat a = oracle::random_matrix(5, 8, rng);
  const DesignMatrix da = normalize_columns(a);
  Mat scaled = a;
  scaled.col(3) *= 7.0;
  const DesignMatrix ds = normalize_columns(scaled);
  CHECK((ds.X() - da.X()).lpNorm<Eigen::Infinity>() <= 1e-15);
  CHECK(ds.normalization_changed());
  for (Index j = 0; j < 8; ++j) {
    CHECK(da.X().col(j).norm() >= 1 - 1e-10);
    CHECK(da.X().col(j).norm() <= 1 + 1e-10);
  }

  Mat z = a;
  z.col(2).setZero();
  CHECK_THROWS_AS(normalize_columns(z), std::invalid_argument);
}

TEST_CASE("coherence") {
  CHECK(coherence(normalize_columns(Mat::Identity(6, 6))) == 0.0);
  CHECK_THROWS_AS(coherence(normalize_columns(Mat::Ones(3, 1))), std::invalid_argument);

  const DesignMatrix ss = spikes_and_sines(256);
  CHECK(coherence(ss) == doctest::Approx(std::sqrt(2.0 / 256)).epsilon(1e-12));
  CHECK(std::abs(coherence(ss) - 0.08839) <= 1e-5);

  const DesignMatrix g = gaussian_design(128, 256, 7);
  CHECK(coherence(g) == oracle::naive_coherence(g.X()));
}

TEST_CASE("coherence property verdict") {
  const DesignMatrix id = normalize_columns(Mat::Identity(8, 8));
  CHECK(coherence_property_holds(id, 1.0).holds);

  const DesignMatrix block = coherent_block_design(100, 0.01);
  const auto v = coherence_property_holds(block, 1.0);
  CHECK_FALSE(v.holds);
  CHECK(v.ratio == doctest::Approx(0.99 * std::log(100.0)).epsilon(1e-12));

  const DesignMatrix g = gaussian_design(20, 30, 3);
  const double a0 = coherence(g) * std::log(30.0);
  const auto edge = coherence_property_holds(g, a0);
  CHECK(edge.ratio == 1.0);
  CHECK(edge.holds);
  CHECK_THROWS_AS(coherence_property_holds(g, 0.0), std::invalid_argument);
}

TEST_CASE("gaussian_design") {
  const DesignMatrix a = gaussian_design(128, 256, 42);
  const DesignMatrix b = gaussian_design(128, 256, 42);
  CHECK(a.X() == b.X());
  CHECK(gaussian_design(128, 256, 43).X() != a.X());

  const double mu_scale = std::sqrt(2.0 * std::log(256.0) / 128.0);
  const double op_scale = std::sqrt(256.0 / 128.0);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const DesignMatrix d = gaussian_design(128, 256, seed);
    CHECK(d.coherence() >= 0.6 * mu_scale);
    CHECK(d.coherence() <= 1.6 * mu_scale);
    CHECK(d.opnorm() >= 0.5 * op_scale);
    CHECK(d.opnorm() <= 3.0 * op_scale);
  }
  CHECK_THROWS_AS(gaussian_design(0, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_design(4, 1, 1), std::invalid_argument);
}

TEST_CASE("spikes_and_sines") {
  const Index n = 32;
  const DesignMatrix d = spikes_and_sines(n);
  CHECK(d.p() == 2 * n);
  const Mat f = d.X().rightCols(n);
  CHECK((f.transpose() * f - Mat::Identity(n, n)).norm() <= 1e-10);
  CHECK(d.X().leftCols(n) == Mat::Identity(n, n));
  CHECK(d.coherence() == doctest::Approx(std::sqrt(2.0 / n)).epsilon(1e-12));
  CHECK(std::abs(d.opnorm() - std::sqrt(2.0)) <= 1e-6);
  check_unit_columns_and_coherence(d);
  CHECK_THROWS_AS(spikes_and_sines(7), std::invalid_argument);

  // Explicit basis formulas.
  const double pi = std::numbers::pi;
  for (Index t = 0; t < n; ++t) {
    CHECK(f(t, 0) == doctest::Approx(1.0 / std::sqrt(double(n))));
    CHECK(f(t, n - 1) == doctest::Approx((t % 2 ? -1.0 : 1.0) / std::sqrt(double(n))));
    for (Index k = 1; k < n / 2; ++k) {
      CHECK(std::abs(f(t, 2 * k - 1) - std::sqrt(2.0 / n) * std::cos(2 * pi * k * t / n)) <= 1e-12);
      CHECK(std::abs(f(t, 2 * k) - std::sqrt(2.0 / n) * std::sin(2 * pi * k * t / n)) <= 1e-12);
    }
  }
}

TEST_CASE("counterexample_dictionary") {
  const DesignMatrix d = counterexample_dictionary(256);
  CHECK(d.n() == 256);
  CHECK(d.p() == 511);
  CHECK(d.coherence() == doctest::Approx(std::sqrt(2.0 / 256)).epsilon(1e-12));
  check_unit_columns_and_coherence(counterexample_dictionary(16));
  CHECK_THROWS_AS(counterexample_dictionary(8), std::invalid_argument);
  CHECK_THROWS_AS(counterexample_dictionary(1), std::invalid_argument);
  CHECK_THROWS_AS(counterexample_dictionary(32), std::invalid_argument);
}

TEST_CASE("comb identity reconstructs the constant vector") {
  for (Index n : {16, 64, 256, 1024}) {
    CAPTURE(n);
    const DesignMatrix d = counterexample_dictionary(n);
    const Vec beta = comb_identity_coeffs(n);
    const Index root = static_cast<Index>(std::llround(std::sqrt(double(n))));
    const Index nnz = (beta.array() != 0.0).count();
    CHECK(nnz == root + root / 2);
    CHECK((beta.head(n).array() != 0.0).count() == root);
    CHECK((oracle::naive_matvec(d.X(), beta) - Vec::Ones(n)).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  CHECK((comb_identity_coeffs(256).array() != 0.0).count() == 24);
  CHECK(((comb_identity_coeffs(16).array() != 0.0).count()) == 6);
  CHECK_THROWS_AS(comb_identity_coeffs(12), std::invalid_argument);
}

TEST_CASE("comb identity against the direct trigonometric formula") {
  // 1 = sqrt(n) [comb(t) - (-1)^t / sqrt(n) - sqrt 2 sum_k sqrt(2/n) cos(2 pi k sqrt(n) t / n)]
  const Index n = 64;
  const Index root = 8;
  for (Index t = 0; t < n; ++t) {
    double v = (t % root == 0) ? 1.0 : 0.0;
    v -= (t % 2 ? -1.0 : 1.0) / std::sqrt(double(n));
    for (Index k = 1; k < root / 2; ++k) {
      v -= std::sqrt(2.0) * std::sqrt(2.0 / n) * std::cos(2 * std::numbers::pi * k * root * t / n);
    }
    CHECK(std::abs(std::sqrt(double(n)) * v - 1.0) <= 1e-12);
  }
}

TEST_CASE("coherent_block_design") {
  const double eps = 0.3;
  const DesignMatrix d = coherent_block_design(10, eps);
  for (Index b = 0; b < 5; ++b) {
    const Mat g = gram(d.X(), IndexSet{2 * b, 2 * b + 1});
    CHECK(std::abs(g(0, 0) - 1) <= 1e-12);
    CHECK(std::abs(g(1, 1) - 1) <= 1e-12);
    CHECK(std::abs(g(0, 1) - (1 - eps)) <= 1e-12);
    const Eigen::SelfAdjointEigenSolver<Mat> es(g);
    CHECK(std::abs(es.eigenvalues()[0] - eps) <= 1e-12);
    CHECK(std::abs(es.eigenvalues()[1] - (2 - eps)) <= 1e-12);
  }
  // Different blocks are orthogonal.
  CHECK(gram(d.X(), IndexSet{0, 2})(0, 1) == 0.0);
  CHECK(coherent_block_design(8, 1.0).coherence() == 0.0);
  CHECK_THROWS_AS(coherent_block_design(7, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(coherent_block_design(8, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(coherent_block_design(8, 1.5), std::invalid_argument);
  check_unit_columns_and_coherence(d);
}

TEST_CASE("CSV round trip and parsing") {
  const DesignMatrix d = gaussian_design(6, 4, 9);
  const auto path = temp_file("roundtrip.csv");
  save_matrix_csv(d, path);
  const DesignMatrix back = load_matrix_csv(path);
  CHECK(back.X() == d.X());
  CHECK_FALSE(back.normalization_changed());

  const auto id = temp_file("identity.csv");
  write_file(id, "1,0\n0,1\n");
  const DesignMatrix di = load_matrix_csv(id);
  CHECK(di.X() == Mat::Identity(2, 2));

  const auto hdr = temp_file("header.csv");
  write_file(hdr, "a,b\n3,0\n4,2\n");
  const DesignMatrix dh = load_matrix_csv(hdr, true);
  CHECK(dh.normalization_changed());
  CHECK(dh.X()(0, 0) == doctest::Approx(0.6));
  CHECK(dh.X()(1, 0) == doctest::Approx(0.8));

  const auto ragged = temp_file("ragged.csv");
  write_file(ragged, "1,2,3\n4,5\n6,7,8\n");
  try {
    read_csv_matrix(ragged);
    FAIL("expected a parse error");
  } catch (const CsvParseError& e) {
    CHECK(e.row() == 2);
  }

  const auto bad = temp_file("bad.csv");
  write_file(bad, "1,2\n3,x\n");
  try {
    read_csv_matrix(bad);
    FAIL("expected a parse error");
  } catch (const CsvParseError& e) {
    CHECK(e.row() == 2);
    CHECK(e.col() == 2);
  }
  CHECK_THROWS(read_csv_matrix(temp_file("does_not_exist.csv")));

  for (const auto& p : {path, id, hdr, ragged, bad}) std::filesystem::remove(p);
}

TEST_CASE("format_double round-trips") {
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(40)) - 20.0);
    CHECK(std::stod(format_double(v)) == v);
  }
}
