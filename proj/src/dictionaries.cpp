#include "lassolab/dictionaries.hpp"

#include "lassolab/rng.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

namespace lassolab {

namespace {

constexpr double kUnitNormSlack = 1e-14;

bool is_power_of_four(Index n) {
  if (n < 4) return false;
  while (n % 4 == 0) n /= 4;
  return n == 1;
}

constexpr Index kSharedGramMax = 1024;

// Largest off-diagonal magnitude of a Gram matrix.
double gram_coherence(const Mat& g) {
  double mu = 0.0;
  for (Index j = 1; j < g.cols(); ++j) {
    for (Index i = 0; i < j; ++i) mu = std::max(mu, std::abs(g(i, j)));
  }
  return mu;
}

}  // namespace

DesignMatrix normalize_columns(Mat a, std::string label) {
  require_finite(a, "normalize_columns");
  DesignMatrix d;
  for (Index j = 0; j < a.cols(); ++j) {
    const double nrm = a.col(j).norm();
    if (nrm == 0.0) {
      throw std::invalid_argument("normalize_columns: column " + std::to_string(j) + " is zero");
    }
    if (std::abs(nrm - 1.0) > kUnitNormSlack) {
      a.col(j) /= nrm;
      d.normalization_changed_ = true;
    }
  }
  d.x_ = std::move(a);
  if (d.x_.cols() >= 2 && d.x_.cols() <= std::min<Index>(d.x_.rows(), kSharedGramMax)) {
    // One Gram matrix serves both the coherence and the operator norm.
    const Mat g = d.x_.transpose() * d.x_;
    d.coherence_ = gram_coherence(g);
    const Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
    d.opnorm_ = std::sqrt(std::max(es.eigenvalues().maxCoeff(), d.x_.colwise().squaredNorm().maxCoeff()));
  } else {
    d.coherence_ = pairwise_coherence(d.x_);
    d.opnorm_ = operator_norm(d.x_, 1e-12);
  }
  d.label_ = std::move(label);
  return d;
}

double pairwise_coherence(const Mat& a) {
  if (a.cols() < 2) return 0.0;
  return gram_coherence(a.transpose() * a);
}

double coherence(const DesignMatrix& d) {
  if (d.p() < 2) throw std::invalid_argument("coherence: need at least two columns");
  return d.coherence();
}

CoherenceVerdict coherence_property_holds(const DesignMatrix& d, double a0) {
  if (!(a0 > 0.0)) throw std::invalid_argument("coherence_property_holds: A0 must be positive");
  const double ratio = coherence(d) * std::log(static_cast<double>(d.p())) / a0;
  return {ratio <= 1.0, ratio};
}

DesignMatrix gaussian_design(Index n, Index p, std::uint64_t seed) {
  if (n < 1 || p < 2) throw std::invalid_argument("gaussian_design: need n >= 1 and p >= 2");
  Rng rng(seed);
  Mat a(n, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < n; ++i) a(i, j) = rng.normal();
  }
  return normalize_columns(std::move(a), "gaussian");
}

Mat fourier_orthobasis(Index n) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("fourier_orthobasis: n must be even and >= 2");
  const double dn = static_cast<double>(n);
  const double c0 = 1.0 / std::sqrt(dn);
  const double c1 = std::sqrt(2.0 / dn);
  Mat f(n, n);
  for (Index t = 0; t < n; ++t) {
    f(t, 0) = c0;
    f(t, n - 1) = (t % 2 == 0) ? c0 : -c0;
    for (Index k = 1; k < n / 2; ++k) {
      // Reduce k t mod n before scaling so large n keeps full phase accuracy.
      const double phase = 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / dn;
      f(t, 2 * k - 1) = c1 * std::cos(phase);
      f(t, 2 * k) = c1 * std::sin(phase);
    }
  }
  return f;
}

DesignMatrix spikes_and_sines(Index n) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("spikes_and_sines: n must be even");
  Mat x(n, 2 * n);
  x.leftCols(n).setIdentity();
  x.rightCols(n) = fourier_orthobasis(n);
  return normalize_columns(std::move(x), "spikes_and_sines");
}

DesignMatrix counterexample_dictionary(Index n) {
  if (!is_power_of_four(n)) {
    throw std::invalid_argument("counterexample_dictionary: n must be 2^(2j) with j >= 1");
  }
  Mat x(n, 2 * n - 1);
  x.leftCols(n).setIdentity();
  x.rightCols(n - 1) = fourier_orthobasis(n).rightCols(n - 1);
  return normalize_columns(std::move(x), "counterexample");
}

Vec comb_identity_coeffs(Index n) {
  if (!is_power_of_four(n)) {
    throw std::invalid_argument("comb_identity_coeffs: n must be 2^(2j) with j >= 1");
  }
  const Index root = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));  // 2^j
  const double sn = static_cast<double>(root);
  // Column of phi_m in the counterexample dictionary (phi_1 is absent).
  auto sinusoid_col = [n](Index m) { return n + (m - 2); };

  Vec beta = Vec::Zero(2 * n - 1);
  for (Index k = 0; k < root; ++k) beta[k * root] = sn;
  beta[sinusoid_col(n)] = -sn;
  for (Index k = 1; k < root / 2; ++k) {
    beta[sinusoid_col(k * 2 * root)] = -std::numbers::sqrt2 * sn;
  }
  return beta;
}

Mat coherent_block(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("coherent_block: eps must lie in (0, 1]");
  const double c = 1.0 - eps;
  Mat b(2, 2);
  b << 1.0, c,
       0.0, std::sqrt(std::max(0.0, 1.0 - c * c));
  return b;
}

DesignMatrix coherent_block_design(Index n, double eps) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("coherent_block_design: n must be even");
  const Mat block = coherent_block(eps);
  Mat x = Mat::Zero(n, n);
  for (Index b = 0; b < n / 2; ++b) x.block(2 * b, 2 * b, 2, 2) = block;
  return normalize_columns(std::move(x), "coherent_block");
}

CsvParseError::CsvParseError(std::size_t row, std::size_t col, const std::string& what)
    : std::runtime_error("CSV row " + std::to_string(row) +
                         (col ? ", column " + std::to_string(col) : std::string()) + ": " + what),
      row_(row),
      col_(col) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Mat read_csv_matrix(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (has_header && lineno == 1) continue;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest(line);
    std::size_t field = 0;
    while (true) {
      ++field;
      const auto comma = rest.find(',');
      const std::string_view tok = trim(rest.substr(0, comma));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw CsvParseError(lineno, field, "cannot parse '" + std::string(tok) + "' as a number");
      }
      if (!std::isfinite(v)) throw CsvParseError(lineno, field, "non-finite value");
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw CsvParseError(lineno, 0,
                          "ragged row: expected " + std::to_string(rows.front().size()) +
                              " fields, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvParseError(lineno, 0, "no data rows");

  Mat m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

void write_csv_matrix(const Mat& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

DesignMatrix load_matrix_csv(const std::filesystem::path& path, bool has_header) {
  return normalize_columns(read_csv_matrix(path, has_header), path.filename().string());
}

void save_matrix_csv(const DesignMatrix& d, const std::filesystem::path& path) {
  write_csv_matrix(d.X(), path);
}

}  // namespace lassolab
