#pragma once

#include "lassolab/conditions.hpp"
#include "lassolab/dictionaries.hpp"
#include "lassolab/lasso.hpp"
#include "lassolab/sparse_models.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lassolab {

inline constexpr int kSchemaVersion = 1;

/// Raised for inconsistent experiment parameters (the CLI maps it to exit code 1).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameters shared by all experiments. Unset optionals take per-experiment
/// defaults, documented on each run_* function.
struct ExperimentConfig {
  std::optional<Index> n;
  std::optional<Index> p;
  std::optional<Index> s;
  std::optional<double> sigma;
  std::optional<double> lambda;  // default 2 sqrt(2 log p)
  double eps = 0.01;
  double a0 = 1.0;
  double c0 = 0.125;
  double nu = 0.75;
  double amplitude = 1.0;          // constant amplitude for thm12 / thm14
  double amplitude_factor = 1.01;  // thm13 amplitudes, in units of 8 sigma sqrt(2 log p)
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  std::optional<bool> fixed_design;
  std::optional<Index> cap;  // subset size cap for exhaustive searches
  SolverOptions solver;
  unsigned workers = 0;  // 0 = hardware concurrency; never affects results
};

/// Seed of trial k under a master seed.
std::uint64_t trial_seed(std::uint64_t master, std::size_t trial);

/// Count with a 95% Wilson score interval.
struct Proportion {
  std::size_t count = 0;
  std::size_t trials = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

Proportion make_proportion(std::size_t count, std::size_t trials);

/// One row of per-trial output. Optional fields do not apply to every
/// experiment and are left empty in CSV and null in JSON.
struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double squared_error = 0.0;
  std::optional<double> bound;
  std::optional<bool> bound_satisfied;
  Index support_size = 0;
  std::optional<bool> support_recovered;
  std::optional<bool> sign_agreement;
  std::optional<bool> conditions_ok;
  int iterations = 0;
  bool converged = false;
  /// Experiment-specific values, JSON only.
  std::vector<std::pair<std::string, double>> extra;
};

/// Named pass/fail threshold, evaluated when the CLI runs with --assert.
struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Serializable outcome of any experiment.
struct ExperimentReport {
  std::string experiment;
  nlohmann::ordered_json config;
  nlohmann::ordered_json summary;
  std::vector<std::string> warnings;
  std::vector<TrialRecord> records;
  std::vector<Assertion> assertions;

  bool all_assertions_pass() const;
};

/// The full report, schema_version first.
nlohmann::ordered_json report_json(const ExperimentReport& r);
/// Pretty-printed report_json with a trailing newline.
std::string report_text(const ExperimentReport& r);

/// Columns of the per-trial CSV, in order.
const std::vector<std::string>& plotdata_columns();
std::string plotdata_csv(const std::vector<TrialRecord>& records);
void emit_plotdata(const std::vector<TrialRecord>& records, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

/// Design, ground truth and observation for one trial.
struct TrialInstance {
  std::uint64_t seed = 0;
  std::shared_ptr<const DesignMatrix> design;
  SparseModel model;
  Observation obs;
};

// ---------------------------------------------------------------------------
// Lasso risk against C0 (2 log p) S sigma^2.
// Defaults: n = 128, p = 256, S = 10, sigma = 1, fresh Gaussian design per
// trial, constant amplitude `amplitude`. sigma = 0 keeps the penalty and the
// bound at unit scale and only removes the noise.

struct Theorem12Result {
  Index n = 0, p = 0, s = 0;
  double sigma = 0.0, lambda = 0.0, bound = 0.0;
  bool fixed_design = false;
  double sparsity_cap = 0.0;  // c0 p / (||X||^2 log p) for the first design
  Proportion satisfied;
  Proportion converged;
  double mean_squared_error = 0.0;
  double max_squared_error = 0.0;
  std::vector<TrialRecord> records;
  std::vector<std::string> warnings;
};

TrialInstance theorem12_instance(const ExperimentConfig& cfg, std::size_t trial);
Theorem12Result run_theorem12(const ExperimentConfig& cfg);
ExperimentReport to_report(const Theorem12Result& r, const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Exact support and sign recovery.
// Defaults: n = 128, p = 256, S = 5, sigma = 1, fixed Gaussian design,
// amplitudes amplitude_factor * 8 sigma sqrt(2 log p). Each trial also
// evaluates the five recovery conditions; when they hold and the amplitudes
// clear the threshold, the lasso output is compared with beta + h from
// closed_form_on_support.

struct Theorem13Result {
  Index n = 0, p = 0, s = 0;
  double sigma = 0.0, lambda = 0.0, amplitude = 0.0;
  bool fixed_design = true;
  Proportion recovered;  // support and signs
  Proportion support_only;
  Proportion conditions_hold;
  std::size_t qualifying = 0;         // conditions hold and amplitude above threshold
  std::size_t closed_form_match = 0;  // qualifying trials where the lasso equals beta + h to 1e-6
  double max_closed_form_deviation = 0.0;
  std::vector<TrialRecord> records;
  std::vector<std::string> warnings;
};

TrialInstance theorem13_instance(const ExperimentConfig& cfg, std::size_t trial);
Theorem13Result run_theorem13(const ExperimentConfig& cfg);
ExperimentReport to_report(const Theorem13Result& r, const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Lasso risk against the ideal-risk oracle inequality.
// Defaults: n = 12, p = 16, S = 3, sigma = 1, fresh Gaussian design,
// constant amplitude. The inner minimum is found by exhaustive search.

struct Theorem14Result {
  Index n = 0, p = 0, s = 0;
  double sigma = 0.0, lambda = 0.0;
  bool fixed_design = false;
  Proportion satisfied;
  /// Trials where the bound is at most (1 + sqrt 2) C0' (2 log p) S sigma^2.
  std::size_t sparse_shape_consistent = 0;
  double max_ratio = 0.0;  // squared error / bound
  std::vector<TrialRecord> records;
  std::vector<std::string> warnings;
};

TrialInstance theorem14_instance(const ExperimentConfig& cfg, std::size_t trial);
Theorem14Result run_theorem14(const ExperimentConfig& cfg);
ExperimentReport to_report(const Theorem14Result& r, const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Spikes and sinusoids without the constant sinusoid, y = 1 + z.
// Defaults: n = 256, sigma = 0.4 / lambda, 50 trials. Requires
// lambda sigma <= 1/2; the noise is redrawn (up to 100 times per trial)
// until max |z_i| < 1 - lambda sigma.

struct Counterexample21Result {
  Index n = 0, p = 0;
  double sigma = 0.0, lambda = 0.0;
  Index sparse_size = 0;  // nonzeros of the comb identity representation
  double mean_support_size = 0.0;
  Index min_support_size = 0, max_support_size = 0;
  double max_closed_form_deviation = 0.0;  // max over trials of ||beta_hat - closed form||_inf
  double max_offsupport_correlation = 0.0;  // of the closed form, over sinusoids
  std::size_t unique_certified = 0;
  double mean_squared_error = 0.0;
  double predicted_squared_error = 0.0;  // (1 + lambda^2) n sigma^2
  double mean_oracle_error = 0.0;        // least squares on the comb support
  double predicted_oracle_error = 0.0;   // (3/2) sqrt(n) sigma^2
  std::size_t noise_redraws = 0;
  std::size_t trials = 0;
  std::vector<TrialRecord> records;
  std::vector<std::string> warnings;
};

Counterexample21Result run_counterexample_21(const ExperimentConfig& cfg);
ExperimentReport to_report(const Counterexample21Result& r, const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Block diagonal design of coherent pairs with the three-point coefficient law.
// Defaults: n = 100, eps from the config, sigma = 1, 2000 trials. A blow-up
// block is one whose coefficients are +-(1, -1) / eps; it "triggers" when
// ||X_b^* y_b||_inf <= lambda sigma, where the block estimate is zero.

struct Counterexample22Result {
  Index n = 0;
  double eps = 0.0, sigma = 0.0, lambda = 0.0;
  Proportion any_blowup;
  double predicted_rate = 0.0;  // 1 - (1 - 2/n)^{n/2}
  double std_error = 0.0;       // binomial, at the predicted rate
  bool within_3se = false;
  std::size_t blowup_blocks = 0;
  std::size_t triggered_blocks = 0;
  double min_triggered_loss = 0.0;  // over triggered blocks; +inf if none
  bool triggered_loss_ok = false;   // every triggered block loses >= 2 / eps
  double mean_squared_error = 0.0;
  std::vector<TrialRecord> records;
  std::vector<std::string> warnings;
};

Counterexample22Result run_counterexample_22(const ExperimentConfig& cfg);
ExperimentReport to_report(const Counterexample22Result& r, const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Single-instance reports.

nlohmann::ordered_json to_json(const ConditionCheck& c);
nlohmann::ordered_json to_json(const ConditionReport& r);
nlohmann::ordered_json to_json(const AdmissibilityReport& r);
nlohmann::ordered_json to_json(const TailCheck& t);
nlohmann::ordered_json to_json(const TroppEstimate& e);
nlohmann::ordered_json to_json(const Proportion& p);

/// Full condition battery for the support/signs on `design`, with noise
/// z = N(0, Id) drawn from `seed` and lambda_p = sqrt(2 log p).
ExperimentReport verify_instance(const DesignMatrix& design, const IndexSet& support, std::span<const int> signs,
                                 const ExperimentConfig& cfg);

ExperimentReport coherence_report(const DesignMatrix& design, const ExperimentConfig& cfg);

ExperimentReport solve_report(const DesignMatrix& design, const Vec& y, const ExperimentConfig& cfg);

ExperimentReport tropp_report(const DesignMatrix& design, const ExperimentConfig& cfg);

ExperimentReport lemma36_report(const DesignMatrix& design, Index column, const ExperimentConfig& cfg);

}  // namespace lassolab
