// Command-line front end for the lasso experiments and diagnostics.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 a threshold
// failed under --assert.

#include "lassolab/dictionaries.hpp"
#include "lassolab/experiments.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace lassolab;

struct Options {
  std::optional<Index> n, p, s;
  std::optional<double> sigma, lambda;
  double eps = 0.01;
  double a0 = 1.0;
  double c0 = 0.125;
  double nu = 0.75;
  double amplitude = 1.0;
  double amplitude_factor = 1.01;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 1;
  bool fixed_design = false;
  bool fresh_design = false;
  std::optional<Index> cap;
  std::string backend = "fista";
  int max_iter = 100000;
  double tol = 1e-8;
  unsigned workers = 0;

  std::string design = "gaussian";
  std::string matrix;
  bool header = false;
  std::string y_path;
  std::string support;
  std::string signs;
  Index column = 0;

  std::string out;
  std::string csv;
  bool assert_mode = false;
};

void add_config_options(CLI::App* sc, Options& o) {
  sc->add_option("--n", o.n, "Number of observations");
  sc->add_option("--p", o.p, "Number of predictors");
  sc->add_option("--s", o.s, "Sparsity S");
  sc->add_option("--sigma", o.sigma, "Noise level");
  sc->add_option("--lambda", o.lambda, "Penalty multiplier (default 2 sqrt(2 log p))");
  sc->add_option("--eps", o.eps, "Coherence gap of the 2x2 blocks");
  sc->add_option("--a0", o.a0, "Constant A0 of the coherence property");
  sc->add_option("--c0", o.c0, "Constant c0 of the sparsity cap and admissibility");
  sc->add_option("--nu", o.nu, "Irrepresentable margin");
  sc->add_option("--amplitude", o.amplitude, "Constant amplitude of nonzero coefficients");
  sc->add_option("--amplitude-factor", o.amplitude_factor, "Amplitude in units of 8 sigma sqrt(2 log p)");
  sc->add_option("--trials", o.trials, "Monte Carlo trials");
  sc->add_option("--seed", o.seed, "Master seed");
  sc->add_flag("--fixed-design", o.fixed_design, "Reuse one design across trials");
  sc->add_flag("--fresh-design", o.fresh_design, "Draw a new design for every trial");
  sc->add_option("--cap", o.cap, "Subset size cap for exhaustive search");
  sc->add_option("--backend", o.backend, "Solver backend")->check(CLI::IsMember({"fista", "cd"}));
  sc->add_option("--max-iter", o.max_iter, "Solver iteration limit");
  sc->add_option("--tol", o.tol, "Solver KKT tolerance");
  sc->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
  sc->add_option("--out", o.out, "Write the JSON report here instead of stdout");
  sc->add_option("--csv", o.csv, "Write per-trial CSV plot data here");
  sc->add_flag("--assert", o.assert_mode, "Exit with code 2 if a threshold fails");
}

void add_design_options(CLI::App* sc, Options& o) {
  sc->add_option("--design", o.design, "Built-in design")
      ->check(CLI::IsMember({"gaussian", "spikes-sines", "counterexample", "coherent-block", "identity"}));
  sc->add_option("--matrix", o.matrix, "Design matrix CSV (rows are observations)");
  sc->add_flag("--header", o.header, "The CSV files have a header row");
}

ExperimentConfig to_config(const Options& o, std::size_t default_trials) {
  if (o.fixed_design && o.fresh_design) throw ConfigError("--fixed-design and --fresh-design are exclusive");
  ExperimentConfig c;
  c.n = o.n;
  c.p = o.p;
  c.s = o.s;
  c.sigma = o.sigma;
  c.lambda = o.lambda;
  c.eps = o.eps;
  c.a0 = o.a0;
  c.c0 = o.c0;
  c.nu = o.nu;
  c.amplitude = o.amplitude;
  c.amplitude_factor = o.amplitude_factor;
  c.trials = o.trials.value_or(default_trials);
  c.seed = o.seed;
  if (o.fixed_design) c.fixed_design = true;
  if (o.fresh_design) c.fixed_design = false;
  c.cap = o.cap;
  c.solver.backend = parse_backend(o.backend);
  c.solver.max_iter = o.max_iter;
  c.solver.tol = o.tol;
  c.workers = o.workers;
  return c;
}

DesignMatrix load_design(const Options& o) {
  if (!o.matrix.empty()) return load_matrix_csv(o.matrix, o.header);
  const Index n = o.n.value_or(128);
  if (o.design == "gaussian") return gaussian_design(n, o.p.value_or(2 * n), o.seed);
  if (o.design == "spikes-sines") return spikes_and_sines(n);
  if (o.design == "counterexample") return counterexample_dictionary(n);
  if (o.design == "coherent-block") return coherent_block_design(n, o.eps);
  return normalize_columns(Mat::Identity(n, n), "identity");
}

std::vector<long long> parse_int_list(const std::string& text, const char* what) {
  std::vector<long long> out;
  std::string_view rest(text);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view tok = rest.substr(0, comma);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ConfigError(std::string("cannot parse ") + what + " entry '" + std::string(tok) + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

Vec load_vector(const Options& o) {
  const Mat m = read_csv_matrix(o.y_path, o.header);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw ConfigError("--y must hold a single row or column");
}

int emit(const ExperimentReport& rep, const Options& o) {
  const std::string text = report_text(rep);
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_text(text, o.out);
  }
  if (!o.csv.empty()) emit_plotdata(rep.records, o.csv);
  if (o.assert_mode && !rep.all_assertions_pass()) {
    for (const auto& a : rep.assertions) {
      if (!a.passed) std::cerr << "assertion failed: " << a.name << " (" << a.detail << ")\n";
    }
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lasso experiments, risk baselines and condition checks"};
  app.require_subcommand(1);
  Options o;

  auto* coherence = app.add_subcommand("coherence", "Coherence and operator norm of a design");
  auto* solve_cmd = app.add_subcommand("solve", "Solve one lasso problem");
  auto* verify = app.add_subcommand("verify", "Evaluate every condition on one support");
  auto* thm12 = app.add_subcommand("thm12", "Lasso risk against C0 (2 log p) S sigma^2");
  auto* thm13 = app.add_subcommand("thm13", "Exact support and sign recovery");
  auto* thm14 = app.add_subcommand("thm14", "Lasso risk against the ideal-risk oracle inequality");
  auto* cex21 = app.add_subcommand("cex21", "Spikes and sinusoids counterexample");
  auto* cex22 = app.add_subcommand("cex22", "Coherent 2x2 block counterexample");
  auto* tropp = app.add_subcommand("tropp", "Moment bounds for random sub-Gram matrices");
  auto* lemma36 = app.add_subcommand("lemma36", "Tail of the squared cross-correlation sum");

  for (auto* sc : {coherence, solve_cmd, verify, thm12, thm13, thm14, cex21, cex22, tropp, lemma36}) {
    add_config_options(sc, o);
  }
  for (auto* sc : {coherence, solve_cmd, verify, tropp, lemma36}) add_design_options(sc, o);
  solve_cmd->add_option("--y", o.y_path, "Response CSV (one row or column); synthetic if omitted");
  verify->add_option("--support", o.support, "Comma-separated column indices")->required();
  verify->add_option("--signs", o.signs, "Comma-separated +-1 signs (default all +1)");
  lemma36->add_option("--column", o.column, "Fixed column i");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*thm12) {
      const ExperimentConfig c = to_config(o, 200);
      return emit(to_report(run_theorem12(c), c), o);
    }
    if (*thm13) {
      const ExperimentConfig c = to_config(o, 200);
      return emit(to_report(run_theorem13(c), c), o);
    }
    if (*thm14) {
      const ExperimentConfig c = to_config(o, 200);
      return emit(to_report(run_theorem14(c), c), o);
    }
    if (*cex21) {
      const ExperimentConfig c = to_config(o, 50);
      return emit(to_report(run_counterexample_21(c), c), o);
    }
    if (*cex22) {
      const ExperimentConfig c = to_config(o, 2000);
      return emit(to_report(run_counterexample_22(c), c), o);
    }
    if (*coherence) {
      const ExperimentConfig c = to_config(o, 1);
      return emit(coherence_report(load_design(o), c), o);
    }
    if (*solve_cmd) {
      const ExperimentConfig c = to_config(o, 1);
      const DesignMatrix d = load_design(o);
      Vec y;
      if (!o.y_path.empty()) {
        y = load_vector(o);
      } else {
        const SparseModel m = sample_generic_sparse(d.p(), o.s.value_or(std::min<Index>(5, d.p())),
                                                    AmplitudeRule::constant(o.amplitude), derive_seed(o.seed, 2));
        y = observe(d, m.beta, o.sigma.value_or(1.0), derive_seed(o.seed, 3)).y;
      }
      return emit(solve_report(d, y, c), o);
    }
    if (*verify) {
      const ExperimentConfig c = to_config(o, 1);
      const DesignMatrix d = load_design(o);
      std::vector<Index> idx;
      for (long long v : parse_int_list(o.support, "support")) idx.push_back(static_cast<Index>(v));
      std::vector<int> signs;
      if (o.signs.empty()) {
        signs.assign(idx.size(), 1);
      } else {
        for (long long v : parse_int_list(o.signs, "signs")) signs.push_back(static_cast<int>(v));
      }
      if (signs.size() != idx.size()) throw ConfigError("--signs must have one entry per support index");
      // Keep each sign attached to its index while sorting.
      std::vector<std::pair<Index, int>> pairs;
      for (std::size_t k = 0; k < idx.size(); ++k) pairs.emplace_back(idx[k], signs[k]);
      std::sort(pairs.begin(), pairs.end());
      idx.clear();
      signs.clear();
      for (const auto& [i, sg] : pairs) {
        idx.push_back(i);
        signs.push_back(sg);
      }
      return emit(verify_instance(d, IndexSet(std::move(idx)), signs, c), o);
    }
    if (*tropp) {
      const ExperimentConfig c = to_config(o, 500);
      return emit(tropp_report(load_design(o), c), o);
    }
    if (*lemma36) {
      const ExperimentConfig c = to_config(o, 2000);
      return emit(lemma36_report(load_design(o), o.column, c), o);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
