#include "lassolab/experiments.hpp"

#include "lassolab/oracle_risk.hpp"
#include "lassolab/parallel.hpp"
#include "lassolab/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace lassolab {

using nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kFixedDesignStream = 0xffffffffffffffffULL;
constexpr std::uint64_t kDesignStream = 1;
constexpr std::uint64_t kModelStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
// cex21 noise redraws use streams kRedrawBase + attempt.
constexpr std::uint64_t kRedrawBase = 16;
constexpr int kMaxRedraws = 100;
constexpr double kClosedFormTol = 1e-6;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void check_common(const ExperimentConfig& cfg) {
  require(cfg.trials >= 1, "trials must be >= 1");
  require(!cfg.sigma || (*cfg.sigma >= 0.0 && std::isfinite(*cfg.sigma)), "sigma must be >= 0");
  require(!cfg.lambda || (*cfg.lambda > 0.0 && std::isfinite(*cfg.lambda)), "lambda must be > 0");
  require(cfg.solver.max_iter >= 1, "max_iter must be >= 1");
  require(cfg.solver.tol > 0.0, "tol must be > 0");
}

// Dimensions, noise level and penalty for the generic Gaussian experiments.
struct Setup {
  Index n = 0, p = 0, s = 0;
  double sigma = 0.0;  // noise level
  double scale = 1.0;  // sigma, or 1 when sigma = 0 (unit penalty scale)
  double lambda = 0.0;
  bool fixed = false;
  std::shared_ptr<const DesignMatrix> shared;
};

Setup make_setup(const ExperimentConfig& cfg, Index n0, Index p0, Index s0, bool fixed0) {
  check_common(cfg);
  Setup st;
  st.n = cfg.n.value_or(n0);
  st.p = cfg.p.value_or(p0);
  st.s = cfg.s.value_or(s0);
  require(st.n >= 1, "n must be >= 1");
  require(st.p >= 2, "p must be >= 2");
  require(st.s >= 1 && st.s <= st.p, "S must satisfy 1 <= S <= p");
  st.sigma = cfg.sigma.value_or(1.0);
  st.scale = st.sigma > 0.0 ? st.sigma : 1.0;
  st.lambda = cfg.lambda.value_or(default_lambda(st.p));
  st.fixed = cfg.fixed_design.value_or(fixed0);
  if (st.fixed) {
    st.shared = std::make_shared<const DesignMatrix>(
        gaussian_design(st.n, st.p, derive_seed(cfg.seed, kFixedDesignStream)));
  }
  return st;
}

TrialInstance make_instance(const Setup& st, const AmplitudeRule& rule, std::uint64_t master, std::size_t trial) {
  TrialInstance inst;
  inst.seed = trial_seed(master, trial);
  inst.design = st.fixed ? st.shared
                         : std::make_shared<const DesignMatrix>(
                               gaussian_design(st.n, st.p, derive_seed(inst.seed, kDesignStream)));
  inst.model = sample_generic_sparse(st.p, st.s, rule, derive_seed(inst.seed, kModelStream));
  inst.obs = observe(*inst.design, inst.model.beta, st.sigma, derive_seed(inst.seed, kNoiseStream));
  return inst;
}

bool signs_agree(const LassoSolution& sol, const SparseModel& m) {
  if (!(sol.support == m.support)) return false;
  for (std::size_t k = 0; k < m.support.size(); ++k) {
    const double b = sol.beta_hat[m.support[k]];
    if ((b > 0.0 ? 1 : -1) != m.signs[k]) return false;
  }
  return true;
}

double prediction_error(const DesignMatrix& d, const Vec& beta, const Vec& beta_hat) {
  return (d.X() * (beta - beta_hat)).squaredNorm();
}

TrialRecord base_record(std::size_t trial, std::uint64_t seed, const LassoSolution& sol, double squared_error) {
  TrialRecord r;
  r.trial = trial;
  r.seed = seed;
  r.squared_error = squared_error;
  r.support_size = static_cast<Index>(sol.support.size());
  r.iterations = sol.iterations;
  r.converged = sol.converged;
  return r;
}

ordered_json solver_json(const SolverOptions& o) {
  ordered_json j;
  j["backend"] = std::string(to_string(o.backend));
  j["max_iter"] = o.max_iter;
  j["tol"] = o.tol;
  j["support_rel"] = o.support_rel;
  return j;
}

ordered_json setup_json(const Setup& st, const ExperimentConfig& cfg) {
  ordered_json j;
  j["n"] = st.n;
  j["p"] = st.p;
  j["s"] = st.s;
  j["sigma"] = st.sigma;
  j["lambda"] = st.lambda;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["fixed_design"] = st.fixed;
  j["solver"] = solver_json(cfg.solver);
  return j;
}

Assertion make_assertion(std::string name, bool passed, std::string detail) {
  return {std::move(name), passed, std::move(detail)};
}

std::string fmt(double v) { return format_double(v); }

std::string rate_detail(const Proportion& p, double floor) {
  return std::to_string(p.count) + "/" + std::to_string(p.trials) + " >= " + fmt(floor);
}

bool rate_at_least(const Proportion& p, double floor) {
  // count / trials >= floor, in integers where possible
  return static_cast<double>(p.count) >= floor * static_cast<double>(p.trials) - 1e-9;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial) {
  return derive_seed(master, static_cast<std::uint64_t>(trial));
}

Proportion make_proportion(std::size_t count, std::size_t trials) {
  Proportion p;
  p.count = count;
  p.trials = trials;
  if (trials == 0) return p;
  const double nt = static_cast<double>(trials);
  const double r = static_cast<double>(count) / nt;
  constexpr double z = 1.959963984540054;
  const double denom = 1.0 + z * z / nt;
  const double centre = (r + z * z / (2.0 * nt)) / denom;
  const double half = z * std::sqrt(r * (1.0 - r) / nt + z * z / (4.0 * nt * nt)) / denom;
  p.rate = r;
  // Clamp so rounding never leaves the point estimate outside the interval.
  p.ci_low = std::clamp(centre - half, 0.0, r);
  p.ci_high = std::clamp(centre + half, r, 1.0);
  return p;
}

bool ExperimentReport::all_assertions_pass() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

template <class T>
ordered_json opt_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json record_json(const TrialRecord& r) {
  ordered_json j;
  j["trial"] = r.trial;
  j["seed"] = r.seed;
  j["squared_error"] = r.squared_error;
  j["bound"] = opt_json(r.bound);
  j["bound_satisfied"] = opt_json(r.bound_satisfied);
  j["support_size"] = r.support_size;
  j["support_recovered"] = opt_json(r.support_recovered);
  j["sign_agreement"] = opt_json(r.sign_agreement);
  j["conditions_ok"] = opt_json(r.conditions_ok);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  if (!r.extra.empty()) {
    ordered_json e = ordered_json::object();
    for (const auto& [k, v] : r.extra) e[k] = v;
    j["extra"] = std::move(e);
  }
  return j;
}

}  // namespace

ordered_json report_json(const ExperimentReport& r) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["experiment"] = r.experiment;
  j["config"] = r.config;
  j["summary"] = r.summary;
  j["warnings"] = r.warnings;
  ordered_json a = ordered_json::array();
  for (const auto& x : r.assertions) {
    a.push_back(ordered_json{{"name", x.name}, {"passed", x.passed}, {"detail", x.detail}});
  }
  j["assertions"] = std::move(a);
  ordered_json t = ordered_json::array();
  for (const auto& rec : r.records) t.push_back(record_json(rec));
  j["trials"] = std::move(t);
  return j;
}

std::string report_text(const ExperimentReport& r) { return report_json(r).dump(2) + "\n"; }

const std::vector<std::string>& plotdata_columns() {
  static const std::vector<std::string> cols{"trial",         "seed",           "squared_error",
                                             "bound",         "bound_satisfied", "support_size",
                                             "support_recovered", "sign_agreement", "conditions_ok",
                                             "iterations",    "converged"};
  return cols;
}

std::string plotdata_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  const auto& cols = plotdata_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  auto flag = [](const std::optional<bool>& b) -> std::string { return b ? (*b ? "1" : "0") : ""; };
  for (const auto& r : records) {
    out << r.trial << ',' << r.seed << ',' << fmt(r.squared_error) << ',' << (r.bound ? fmt(*r.bound) : "")
        << ',' << flag(r.bound_satisfied) << ',' << r.support_size << ',' << flag(r.support_recovered) << ','
        << flag(r.sign_agreement) << ',' << flag(r.conditions_ok) << ',' << r.iterations << ','
        << (r.converged ? 1 : 0) << '\n';
  }
  return out.str();
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void emit_plotdata(const std::vector<TrialRecord>& records, const std::filesystem::path& path) {
  write_text(plotdata_csv(records), path);
}

ordered_json to_json(const Proportion& p) {
  return ordered_json{{"count", p.count}, {"trials", p.trials}, {"rate", p.rate},
                      {"ci_low", p.ci_low}, {"ci_high", p.ci_high}};
}

ordered_json to_json(const ConditionCheck& c) {
  return ordered_json{{"name", c.name}, {"value", c.value}, {"threshold", c.threshold},
                      {"strict", c.strict}, {"ok", c.ok}};
}

ordered_json to_json(const ConditionReport& r) {
  ordered_json j;
  j["invertibility"] = to_json(r.invertibility);
  j["orthogonality"] = to_json(r.orthogonality);
  j["complementary_size"] = to_json(r.complementary_size);
  j["irrepresentable"] = to_json(r.irrepresentable);
  ordered_json t = ordered_json::array();
  for (const auto& c : r.thm13) t.push_back(to_json(c));
  j["recovery_conditions"] = std::move(t);
  return j;
}

ordered_json to_json(const AdmissibilityReport& r) {
  return ordered_json{{"cond1", to_json(r.cond1)}, {"cond2", to_json(r.cond2)}, {"cond3", to_json(r.cond3)},
                      {"admissible", r.admissible}};
}

ordered_json to_json(const TailCheck& t) {
  return ordered_json{{"t", t.t},         {"exceed", t.exceed},       {"trials", t.trials},
                      {"empirical", t.empirical}, {"bound", t.bound}, {"std_error", t.std_error},
                      {"ok", t.ok}};
}

ordered_json to_json(const TroppEstimate& e) {
  return ordered_json{{"q", e.q},
                      {"trials", e.trials},
                      {"mean_support_size", e.mean_support_size},
                      {"empirical_q_norm", e.empirical_q_norm},
                      {"bound", e.bound},
                      {"companion_q_norm", e.companion_q_norm},
                      {"companion_bound", e.companion_bound}};
}

// ---------------------------------------------------------------------------
// Risk bound for generic sparse signals

namespace {

Setup theorem12_setup(const ExperimentConfig& cfg) {
  require(cfg.amplitude > 0.0, "amplitude must be > 0");
  return make_setup(cfg, 128, 256, 10, false);
}

}  // namespace

TrialInstance theorem12_instance(const ExperimentConfig& cfg, std::size_t trial) {
  const Setup st = theorem12_setup(cfg);
  return make_instance(st, AmplitudeRule::constant(cfg.amplitude), cfg.seed, trial);
}

Theorem12Result run_theorem12(const ExperimentConfig& cfg) {
  const Setup st = theorem12_setup(cfg);
  const AmplitudeRule rule = AmplitudeRule::constant(cfg.amplitude);
  Theorem12Result res;
  res.n = st.n;
  res.p = st.p;
  res.s = st.s;
  res.sigma = st.sigma;
  res.lambda = st.lambda;
  res.fixed_design = st.fixed;
  res.bound = theorem12_bound(st.s, st.p, st.scale);

  res.records.resize(cfg.trials);
  std::vector<double> opnorms(cfg.trials, 0.0);
  parallel_for(cfg.trials, [&](std::size_t k) {
    const TrialInstance inst = make_instance(st, rule, cfg.seed, k);
    const LassoProblem prob(*inst.design, inst.obs.y, st.lambda, st.scale);
    const LassoSolution sol = solve(prob, cfg.solver);
    TrialRecord r = base_record(k, inst.seed, sol, prediction_error(*inst.design, inst.model.beta, sol.beta_hat));
    r.bound = res.bound;
    r.bound_satisfied = r.squared_error <= res.bound;
    r.support_recovered = sol.support == inst.model.support;
    r.sign_agreement = signs_agree(sol, inst.model);
    opnorms[k] = inst.design->opnorm();
    res.records[k] = std::move(r);
  }, cfg.workers);

  std::size_t ok = 0, conv = 0;
  double sum = 0.0;
  for (const auto& r : res.records) {
    ok += *r.bound_satisfied ? 1 : 0;
    conv += r.converged ? 1 : 0;
    sum += r.squared_error;
    res.max_squared_error = std::max(res.max_squared_error, r.squared_error);
  }
  res.satisfied = make_proportion(ok, cfg.trials);
  res.converged = make_proportion(conv, cfg.trials);
  res.mean_squared_error = sum / static_cast<double>(cfg.trials);
  res.sparsity_cap = cfg.c0 * static_cast<double>(st.p) /
                     (opnorms.front() * opnorms.front() * std::log(static_cast<double>(st.p)));
  if (static_cast<double>(st.s) > res.sparsity_cap) {
    res.warnings.push_back("S = " + std::to_string(st.s) + " exceeds the sparsity cap c0 p / (||X||^2 log p) = " +
                           fmt(res.sparsity_cap));
  }
  if (conv < cfg.trials) res.warnings.push_back("solver did not converge on every trial");
  return res;
}

ExperimentReport to_report(const Theorem12Result& r, const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.experiment = "thm12";
  Setup st;
  st.n = r.n, st.p = r.p, st.s = r.s, st.sigma = r.sigma, st.lambda = r.lambda, st.fixed = r.fixed_design;
  rep.config = setup_json(st, cfg);
  rep.config["amplitude"] = cfg.amplitude;
  rep.config["c0"] = cfg.c0;
  rep.summary["bound"] = r.bound;
  rep.summary["satisfied"] = to_json(r.satisfied);
  rep.summary["converged"] = to_json(r.converged);
  rep.summary["mean_squared_error"] = r.mean_squared_error;
  rep.summary["max_squared_error"] = r.max_squared_error;
  rep.summary["sparsity_cap"] = r.sparsity_cap;
  rep.warnings = r.warnings;
  rep.records = r.records;
  rep.assertions.push_back(
      make_assertion("bound satisfied in >= 95% of trials", rate_at_least(r.satisfied, 0.95), rate_detail(r.satisfied, 0.95)));
  return rep;
}

// ---------------------------------------------------------------------------
// Support and sign recovery

namespace {

Setup theorem13_setup(const ExperimentConfig& cfg) {
  require(cfg.amplitude_factor > 0.0, "amplitude factor must be > 0");
  return make_setup(cfg, 128, 256, 5, true);
}

}  // namespace

TrialInstance theorem13_instance(const ExperimentConfig& cfg, std::size_t trial) {
  const Setup st = theorem13_setup(cfg);
  return make_instance(st, AmplitudeRule::recovery_threshold(st.scale, st.p, cfg.amplitude_factor), cfg.seed, trial);
}

Theorem13Result run_theorem13(const ExperimentConfig& cfg) {
  const Setup st = theorem13_setup(cfg);
  const AmplitudeRule rule = AmplitudeRule::recovery_threshold(st.scale, st.p, cfg.amplitude_factor);
  const double threshold = 8.0 * st.scale * lambda_p(st.p);
  const double lp = st.lambda / 2.0;

  Theorem13Result res;
  res.n = st.n;
  res.p = st.p;
  res.s = st.s;
  res.sigma = st.sigma;
  res.lambda = st.lambda;
  res.fixed_design = st.fixed;
  res.amplitude = cfg.amplitude_factor * threshold;

  res.records.resize(cfg.trials);
  std::vector<char> qualifying(cfg.trials, 0), matched(cfg.trials, 0);
  std::vector<double> deviation(cfg.trials, 0.0);
  parallel_for(cfg.trials, [&](std::size_t k) {
    const TrialInstance inst = make_instance(st, rule, cfg.seed, k);
    const DesignMatrix& d = *inst.design;
    const LassoProblem prob(d, inst.obs.y, st.lambda, st.scale);
    const LassoSolution sol = solve(prob, cfg.solver);
    TrialRecord r = base_record(k, inst.seed, sol, prediction_error(d, inst.model.beta, sol.beta_hat));
    r.support_recovered = sol.support == inst.model.support;
    r.sign_agreement = signs_agree(sol, inst.model);

    // The conditions are stated for unit noise level and penalty 2 lambda_p.
    const Vec zn = inst.obs.z / st.scale;
    const auto checks = thm13_conditions(d, inst.model.support, inst.model.signs, zn, lp);
    r.conditions_ok = all_ok(checks);
    static const char* names[] = {"cond_i", "cond_ii", "cond_iii", "cond_iv", "cond_v"};
    for (std::size_t c = 0; c < checks.size(); ++c) r.extra.emplace_back(names[c], checks[c].value);

    const double min_amp = *std::min_element(inst.model.amplitudes.begin(), inst.model.amplitudes.end());
    if (*r.conditions_ok && min_amp > threshold) {
      qualifying[k] = 1;
      const Vec h = st.scale * closed_form_on_support(d, inst.model.support, inst.model.signs, zn, lp);
      deviation[k] = inf_norm(sol.beta_hat - (inst.model.beta + h));
      matched[k] = (deviation[k] <= kClosedFormTol && sol.support == inst.model.support) ? 1 : 0;
      r.extra.emplace_back("closed_form_deviation", deviation[k]);
    }
    res.records[k] = std::move(r);
  }, cfg.workers);

  std::size_t rec = 0, sup = 0, cond = 0;
  for (std::size_t k = 0; k < cfg.trials; ++k) {
    const auto& r = res.records[k];
    rec += (*r.support_recovered && *r.sign_agreement) ? 1 : 0;
    sup += *r.support_recovered ? 1 : 0;
    cond += *r.conditions_ok ? 1 : 0;
    res.qualifying += qualifying[k];
    res.closed_form_match += matched[k];
    res.max_closed_form_deviation = std::max(res.max_closed_form_deviation, deviation[k]);
  }
  res.recovered = make_proportion(rec, cfg.trials);
  res.support_only = make_proportion(sup, cfg.trials);
  res.conditions_hold = make_proportion(cond, cfg.trials);
  if (cfg.amplitude_factor < 1.0) {
    res.warnings.push_back("amplitudes are below the recovery threshold 8 sigma sqrt(2 log p)");
  }
  if (st.sigma == 0.0) res.warnings.push_back("sigma = 0: noiseless run with unit penalty scale");
  return res;
}

ExperimentReport to_report(const Theorem13Result& r, const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.experiment = "thm13";
  Setup st;
  st.n = r.n, st.p = r.p, st.s = r.s, st.sigma = r.sigma, st.lambda = r.lambda, st.fixed = r.fixed_design;
  rep.config = setup_json(st, cfg);
  rep.config["amplitude_factor"] = cfg.amplitude_factor;
  rep.summary["amplitude"] = r.amplitude;
  rep.summary["recovered"] = to_json(r.recovered);
  rep.summary["support_only"] = to_json(r.support_only);
  rep.summary["conditions_hold"] = to_json(r.conditions_hold);
  rep.summary["qualifying"] = r.qualifying;
  rep.summary["closed_form_match"] = r.closed_form_match;
  rep.summary["max_closed_form_deviation"] = r.max_closed_form_deviation;
  rep.warnings = r.warnings;
  rep.records = r.records;
  rep.assertions.push_back(make_assertion("support and signs recovered in >= 90% of trials",
                                          rate_at_least(r.recovered, 0.90), rate_detail(r.recovered, 0.90)));
  rep.assertions.push_back(make_assertion(
      "lasso equals beta + h whenever the recovery conditions hold", r.closed_form_match == r.qualifying,
      std::to_string(r.closed_form_match) + "/" + std::to_string(r.qualifying)));
  return rep;
}

// ---------------------------------------------------------------------------
// Oracle inequality against the ideal risk

namespace {

Setup theorem14_setup(const ExperimentConfig& cfg) {
  require(cfg.amplitude > 0.0, "amplitude must be > 0");
  Setup st = make_setup(cfg, 12, 16, 3, false);
  try {
    SearchCap{cfg.cap}.resolve(st.p);
  } catch (const ExhaustiveSearchRefused& e) {
    throw ConfigError(e.what());
  }
  return st;
}

}  // namespace

TrialInstance theorem14_instance(const ExperimentConfig& cfg, std::size_t trial) {
  const Setup st = theorem14_setup(cfg);
  return make_instance(st, AmplitudeRule::constant(cfg.amplitude), cfg.seed, trial);
}

Theorem14Result run_theorem14(const ExperimentConfig& cfg) {
  const Setup st = theorem14_setup(cfg);
  const AmplitudeRule rule = AmplitudeRule::constant(cfg.amplitude);
  const SearchCap cap{cfg.cap};
  const double sparse_shape = (1.0 + std::numbers::sqrt2) * kC0Prime * 2.0 * std::log(static_cast<double>(st.p)) *
                              static_cast<double>(st.s) * st.scale * st.scale;

  Theorem14Result res;
  res.n = st.n;
  res.p = st.p;
  res.s = st.s;
  res.sigma = st.sigma;
  res.lambda = st.lambda;
  res.fixed_design = st.fixed;
  res.records.resize(cfg.trials);
  std::vector<char> shape_ok(cfg.trials, 0);
  parallel_for(cfg.trials, [&](std::size_t k) {
    const TrialInstance inst = make_instance(st, rule, cfg.seed, k);
    const DesignMatrix& d = *inst.design;
    const LassoProblem prob(d, inst.obs.y, st.lambda, st.scale);
    const LassoSolution sol = solve(prob, cfg.solver);
    TrialRecord r = base_record(k, inst.seed, sol, prediction_error(d, inst.model.beta, sol.beta_hat));
    const Theorem14Bound b = theorem14_bound(d, inst.model.beta, st.scale, cap);
    r.bound = b.value;
    r.bound_satisfied = r.squared_error <= b.value;
    r.support_recovered = sol.support == inst.model.support;
    r.sign_agreement = signs_agree(sol, inst.model);
    r.extra.emplace_back("inner_min", b.inner_min);
    r.extra.emplace_back("inner_support_size", static_cast<double>(b.support.size()));
    shape_ok[k] = b.value <= sparse_shape * (1.0 + 1e-12) ? 1 : 0;
    res.records[k] = std::move(r);
  }, cfg.workers);

  std::size_t ok = 0;
  for (std::size_t k = 0; k < cfg.trials; ++k) {
    const auto& r = res.records[k];
    ok += *r.bound_satisfied ? 1 : 0;
    res.sparse_shape_consistent += shape_ok[k];
    if (*r.bound > 0.0) res.max_ratio = std::max(res.max_ratio, r.squared_error / *r.bound);
  }
  res.satisfied = make_proportion(ok, cfg.trials);
  return res;
}

ExperimentReport to_report(const Theorem14Result& r, const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.experiment = "thm14";
  Setup st;
  st.n = r.n, st.p = r.p, st.s = r.s, st.sigma = r.sigma, st.lambda = r.lambda, st.fixed = r.fixed_design;
  rep.config = setup_json(st, cfg);
  rep.config["amplitude"] = cfg.amplitude;
  rep.config["cap"] = opt_json(cfg.cap);
  rep.summary["satisfied"] = to_json(r.satisfied);
  rep.summary["sparse_shape_consistent"] = r.sparse_shape_consistent;
  rep.summary["max_ratio"] = r.max_ratio;
  rep.warnings = r.warnings;
  rep.records = r.records;
  rep.assertions.push_back(
      make_assertion("bound satisfied in >= 95% of trials", rate_at_least(r.satisfied, 0.95), rate_detail(r.satisfied, 0.95)));
  rep.assertions.push_back(make_assertion("bound never exceeds its sparse-signal form",
                                          r.sparse_shape_consistent == r.records.size(),
                                          std::to_string(r.sparse_shape_consistent) + "/" +
                                              std::to_string(r.records.size())));
  return rep;
}

// ---------------------------------------------------------------------------
// Spikes and sinusoids counterexample

Counterexample21Result run_counterexample_21(const ExperimentConfig& cfg) {
  check_common(cfg);
  const Index n = cfg.n.value_or(256);
  require(n >= 4 && (n & (n - 1)) == 0 && (std::countr_zero(static_cast<std::uint64_t>(n)) % 2 == 0),
          "n must be a power of 4");
  require(!cfg.p || *cfg.p == 2 * n - 1, "p is fixed at 2n - 1 for this experiment");
  const DesignMatrix d = counterexample_dictionary(n);
  const Index p = d.p();
  const double lambda = cfg.lambda.value_or(default_lambda(p));
  const double sigma = cfg.sigma.value_or(0.4 / lambda);
  require(sigma > 0.0, "sigma must be > 0 for this experiment");
  const double pen = lambda * sigma;
  require(pen <= 0.5 + 1e-12, "lambda sigma must be <= 1/2 (got " + fmt(pen) + ")");

  const Vec comb = comb_identity_coeffs(n);
  const IndexSet comb_support = IndexSet::nonzeros(comb);
  const Vec ones = Vec::Ones(n);

  Counterexample21Result res;
  res.n = n;
  res.p = p;
  res.sigma = sigma;
  res.lambda = lambda;
  res.trials = cfg.trials;
  res.sparse_size = static_cast<Index>(comb_support.size());
  res.predicted_squared_error = (1.0 + lambda * lambda) * static_cast<double>(n) * sigma * sigma;
  res.predicted_oracle_error = 1.5 * std::sqrt(static_cast<double>(n)) * sigma * sigma;

  res.records.resize(cfg.trials);
  std::vector<double> dev(cfg.trials), offcorr(cfg.trials), oracle(cfg.trials);
  std::vector<std::size_t> redraws(cfg.trials, 0);
  std::vector<char> unique(cfg.trials, 0);
  const Vec zero = Vec::Zero(p);
  parallel_for(cfg.trials, [&](std::size_t k) {
    const std::uint64_t ts = trial_seed(cfg.seed, k);
    Vec z;
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt == kMaxRedraws) {
        throw std::runtime_error("noise condition max |z_i| < 1 - lambda sigma failed " +
                                 std::to_string(kMaxRedraws) + " times; sigma is too large");
      }
      z = observe(d, zero, sigma, derive_seed(ts, kRedrawBase + static_cast<std::uint64_t>(attempt))).z;
      if (inf_norm(z) < 1.0 - pen) break;
    }
    redraws[k] = static_cast<std::size_t>(attempt);
    const Vec y = ones + z;
    const LassoProblem prob(d, y, lambda, sigma);
    const LassoSolution sol = solve(prob, cfg.solver);

    Vec closed = Vec::Zero(p);
    closed.head(n) = y.array() - pen;
    dev[k] = inf_norm(sol.beta_hat - closed);
    const Vec corr = d.X().transpose() * (y - d.X() * closed);
    offcorr[k] = inf_norm(corr.tail(p - n));
    unique[k] = uniqueness_certificate(prob, sol).unique ? 1 : 0;
    oracle[k] = oracle_estimator_risk(d, comb_support, comb, z);

    TrialRecord r = base_record(k, ts, sol, (d.X() * sol.beta_hat - ones).squaredNorm());
    r.extra.emplace_back("closed_form_deviation", dev[k]);
    r.extra.emplace_back("offsupport_correlation", offcorr[k]);
    r.extra.emplace_back("oracle_error", oracle[k]);
    r.extra.emplace_back("noise_redraws", static_cast<double>(attempt));
    res.records[k] = std::move(r);
  }, cfg.workers);

  double serr = 0.0, sor = 0.0, ssz = 0.0;
  res.min_support_size = std::numeric_limits<Index>::max();
  for (std::size_t k = 0; k < cfg.trials; ++k) {
    const auto& r = res.records[k];
    serr += r.squared_error;
    sor += oracle[k];
    ssz += static_cast<double>(r.support_size);
    res.min_support_size = std::min(res.min_support_size, r.support_size);
    res.max_support_size = std::max(res.max_support_size, r.support_size);
    res.max_closed_form_deviation = std::max(res.max_closed_form_deviation, dev[k]);
    res.max_offsupport_correlation = std::max(res.max_offsupport_correlation, offcorr[k]);
    res.unique_certified += unique[k];
    res.noise_redraws += redraws[k];
  }
  const double nt = static_cast<double>(cfg.trials);
  res.mean_squared_error = serr / nt;
  res.mean_oracle_error = sor / nt;
  res.mean_support_size = ssz / nt;
  return res;
}

ExperimentReport to_report(const Counterexample21Result& r, const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.experiment = "cex21";
  rep.config = ordered_json{{"n", r.n}, {"p", r.p}, {"sigma", r.sigma}, {"lambda", r.lambda},
                            {"trials", cfg.trials}, {"seed", cfg.seed}, {"solver", solver_json(cfg.solver)}};
  auto& s = rep.summary;
  s["lambda_sigma"] = r.lambda * r.sigma;
  s["sparse_representation_size"] = r.sparse_size;
  s["mean_support_size"] = r.mean_support_size;
  s["min_support_size"] = r.min_support_size;
  s["max_support_size"] = r.max_support_size;
  s["max_closed_form_deviation"] = r.max_closed_form_deviation;
  s["max_offsupport_correlation"] = r.max_offsupport_correlation;
  s["unique_certified"] = r.unique_certified;
  s["mean_squared_error"] = r.mean_squared_error;
  s["predicted_squared_error"] = r.predicted_squared_error;
  s["mean_oracle_error"] = r.mean_oracle_error;
  s["predicted_oracle_error"] = r.predicted_oracle_error;
  s["noise_redraws"] = r.noise_redraws;
  rep.warnings = r.warnings;
  rep.records = r.records;

  const double rel = std::abs(r.mean_squared_error / r.predicted_squared_error - 1.0);
  const double rel_or = std::abs(r.mean_oracle_error / r.predicted_oracle_error - 1.0);
  rep.assertions.push_back(make_assertion("lasso matches the closed form to 1e-6",
                                          r.max_closed_form_deviation <= kClosedFormTol,
                                          fmt(r.max_closed_form_deviation)));
  rep.assertions.push_back(make_assertion("every solution has n nonzeros",
                                          r.min_support_size == r.n && r.max_support_size == r.n,
                                          std::to_string(r.min_support_size) + ".." + std::to_string(r.max_support_size)));
  rep.assertions.push_back(make_assertion("mean squared error within 20% of (1 + lambda^2) n sigma^2", rel <= 0.2,
                                          "relative deviation " + fmt(rel)));
  rep.assertions.push_back(make_assertion("oracle error within 20% of (3/2) sqrt(n) sigma^2", rel_or <= 0.2,
                                          "relative deviation " + fmt(rel_or)));
  rep.assertions.push_back(make_assertion("closed form has zero sinusoid correlations to 1e-8",
                                          r.max_offsupport_correlation <= 1e-8, fmt(r.max_offsupport_correlation)));
  return rep;
}

// ---------------------------------------------------------------------------
// Coherent block counterexample

Counterexample22Result run_counterexample_22(const ExperimentConfig& cfg) {
  check_common(cfg);
  const Index n = cfg.n.value_or(100);
  require(n >= 4 && n % 2 == 0, "n must be even and >= 4");
  require(cfg.eps > 0.0 && cfg.eps < 1.0, "eps must lie in (0, 1)");
  require(!cfg.p || *cfg.p == n, "p equals n for this experiment");
  const double sigma = cfg.sigma.value_or(1.0);
  const double scale = sigma > 0.0 ? sigma : 1.0;
  const double lambda = cfg.lambda.value_or(default_lambda(n));
  const double pen = lambda * scale;
  const DesignMatrix full = coherent_block_design(n, cfg.eps);
  const DesignMatrix block = normalize_columns(coherent_block(cfg.eps), "coherent_block");
  const Index nb = n / 2;
  const double blowup_loss = 2.0 / cfg.eps;

  Counterexample22Result res;
  res.n = n;
  res.eps = cfg.eps;
  res.sigma = sigma;
  res.lambda = lambda;
  res.records.resize(cfg.trials);
  std::vector<std::size_t> blowups(cfg.trials, 0), triggered(cfg.trials, 0);
  std::vector<double> min_loss(cfg.trials, kInf);
  parallel_for(cfg.trials, [&](std::size_t k) {
    const std::uint64_t ts = trial_seed(cfg.seed, k);
    const SparseModel m = sample_blockwise_beta(n, cfg.eps, derive_seed(ts, kModelStream));
    const Observation obs = observe(full, m.beta, sigma, derive_seed(ts, kNoiseStream));
    Vec beta_hat = Vec::Zero(n);
    int iters = 0;
    bool conv = true;
    for (Index b = 0; b < nb; ++b) {
      const Vec yb = obs.y.segment(2 * b, 2);
      const Vec bb = m.beta.segment(2 * b, 2);
      const LassoProblem prob(block, yb, lambda, scale);
      const LassoSolution sol = solve(prob, cfg.solver);
      beta_hat.segment(2 * b, 2) = sol.beta_hat;
      iters += sol.iterations;
      conv = conv && sol.converged;
      if (bb[0] != 0.0 && bb[0] == -bb[1]) {
        ++blowups[k];
        if (inf_norm(block.X().transpose() * yb) <= pen) {
          ++triggered[k];
          min_loss[k] = std::min(min_loss[k], (block.X() * (bb - sol.beta_hat)).squaredNorm());
        }
      }
    }
    TrialRecord r;
    r.trial = k;
    r.seed = ts;
    r.squared_error = (full.X() * (m.beta - beta_hat)).squaredNorm();
    r.support_size = static_cast<Index>(IndexSet::nonzeros(beta_hat).size());
    r.support_recovered = IndexSet::nonzeros(beta_hat) == m.support;
    r.iterations = iters;
    r.converged = conv;
    r.extra.emplace_back("blowup_blocks", static_cast<double>(blowups[k]));
    r.extra.emplace_back("triggered_blocks", static_cast<double>(triggered[k]));
    if (triggered[k] > 0) r.extra.emplace_back("min_triggered_loss", min_loss[k]);
    res.records[k] = std::move(r);
  }, cfg.workers);

  std::size_t any = 0;
  double sum = 0.0;
  res.min_triggered_loss = kInf;
  for (std::size_t k = 0; k < cfg.trials; ++k) {
    any += blowups[k] > 0 ? 1 : 0;
    res.blowup_blocks += blowups[k];
    res.triggered_blocks += triggered[k];
    res.min_triggered_loss = std::min(res.min_triggered_loss, min_loss[k]);
    sum += res.records[k].squared_error;
  }
  res.any_blowup = make_proportion(any, cfg.trials);
  const double dn = static_cast<double>(n);
  res.predicted_rate = 1.0 - std::pow(1.0 - 2.0 / dn, dn / 2.0);
  res.std_error = std::sqrt(res.predicted_rate * (1.0 - res.predicted_rate) / static_cast<double>(cfg.trials));
  res.within_3se = std::abs(res.any_blowup.rate - res.predicted_rate) <= 3.0 * res.std_error;
  res.triggered_loss_ok = res.triggered_blocks == 0 || res.min_triggered_loss >= blowup_loss * (1.0 - 1e-9);
  res.mean_squared_error = sum / static_cast<double>(cfg.trials);
  return res;
}

ExperimentReport to_report(const Counterexample22Result& r, const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.experiment = "cex22";
  rep.config = ordered_json{{"n", r.n}, {"eps", r.eps}, {"sigma", r.sigma}, {"lambda", r.lambda},
                            {"trials", cfg.trials}, {"seed", cfg.seed}, {"solver", solver_json(cfg.solver)}};
  auto& s = rep.summary;
  s["any_blowup"] = to_json(r.any_blowup);
  s["predicted_rate"] = r.predicted_rate;
  s["std_error"] = r.std_error;
  s["within_3se"] = r.within_3se;
  s["blowup_blocks"] = r.blowup_blocks;
  s["triggered_blocks"] = r.triggered_blocks;
  s["min_triggered_loss"] = r.min_triggered_loss;
  s["blowup_loss"] = 2.0 / r.eps;
  s["mean_squared_error"] = r.mean_squared_error;
  rep.warnings = r.warnings;
  rep.records = r.records;
  rep.assertions.push_back(make_assertion("blow-up frequency within 3 standard errors of 1 - (1 - 2/n)^{n/2}",
                                          r.within_3se,
                                          fmt(r.any_blowup.rate) + " vs " + fmt(r.predicted_rate) + " +- " +
                                              fmt(3.0 * r.std_error)));
  rep.assertions.push_back(make_assertion("triggered blow-up blocks lose at least 2/eps", r.triggered_loss_ok,
                                          std::to_string(r.triggered_blocks) + " blocks, min loss " +
                                              fmt(r.min_triggered_loss)));
  return rep;
}

// ---------------------------------------------------------------------------
// Single-instance reports

namespace {

ordered_json design_json(const DesignMatrix& d) {
  return ordered_json{{"label", d.label()}, {"n", d.n()}, {"p", d.p()}, {"coherence", d.coherence()},
                      {"opnorm", d.opnorm()}, {"normalization_changed", d.normalization_changed()}};
}

ordered_json vec_json(const Vec& v) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json support_json(const IndexSet& s) {
  ordered_json a = ordered_json::array();
  for (Index i : s) a.push_back(i);
  return a;
}

}  // namespace

ExperimentReport verify_instance(const DesignMatrix& design, const IndexSet& support, std::span<const int> signs,
                                 const ExperimentConfig& cfg) {
  check_common(cfg);
  support.check_bound(design.p());
  require(signs.size() == support.size(), "one sign per support index is required");
  require(design.p() >= 2, "p must be >= 2");
  const double lp = lambda_p(design.p());
  const double sigma = cfg.sigma.value_or(1.0);
  const Observation obs = observe(design, Vec::Zero(design.p()), sigma, cfg.seed);
  const ConditionReport cr = condition_report(design, support, signs, obs.z, lp, cfg.nu);
  std::vector<int> pattern(static_cast<std::size_t>(design.p()), 0);
  for (std::size_t k = 0; k < support.size(); ++k) pattern[static_cast<std::size_t>(support[k])] = signs[k];
  const AdmissibilityReport ar = admissible_sign_pattern(design, pattern, cfg.c0);

  ExperimentReport rep;
  rep.experiment = "verify";
  rep.config = ordered_json{{"design", design_json(design)}, {"support", support_json(support)},
                            {"signs", signs}, {"sigma", sigma}, {"seed", cfg.seed}, {"nu", cfg.nu}, {"c0", cfg.c0}};
  rep.summary["lambda_p"] = lp;
  rep.summary["conditions"] = to_json(cr);
  rep.summary["admissibility"] = to_json(ar);
  for (const ConditionCheck* c : {&cr.invertibility, &cr.orthogonality, &cr.complementary_size, &cr.irrepresentable}) {
    rep.assertions.push_back(make_assertion(c->name, c->ok, fmt(c->value) + " vs " + fmt(c->threshold)));
  }
  for (const auto& c : cr.thm13) {
    rep.assertions.push_back(make_assertion(c.name, c.ok, fmt(c.value) + " vs " + fmt(c.threshold)));
  }
  rep.assertions.push_back(make_assertion("admissible sign pattern", ar.admissible, ""));
  return rep;
}

ExperimentReport coherence_report(const DesignMatrix& design, const ExperimentConfig& cfg) {
  require(cfg.a0 > 0.0, "A0 must be > 0");
  require(design.p() >= 2, "coherence needs p >= 2");
  const CoherenceVerdict v = coherence_property_holds(design, cfg.a0);
  ExperimentReport rep;
  rep.experiment = "coherence";
  rep.config = ordered_json{{"design", design.label()}, {"a0", cfg.a0}, {"seed", cfg.seed}};
  rep.summary["design"] = design_json(design);
  const double logp = std::log(static_cast<double>(design.p()));
  rep.summary["gaussian_reference"] = std::sqrt(2.0 * logp / static_cast<double>(design.n()));
  rep.summary["coherence_property"] = ordered_json{{"holds", v.holds}, {"ratio", v.ratio}};
  rep.assertions.push_back(make_assertion("coherence property", v.holds, "ratio " + fmt(v.ratio)));
  return rep;
}

ExperimentReport solve_report(const DesignMatrix& design, const Vec& y, const ExperimentConfig& cfg) {
  check_common(cfg);
  const double sigma = cfg.sigma.value_or(1.0);
  require(sigma > 0.0, "sigma must be > 0; fold the penalty into lambda and use sigma = 1");
  const double lambda = cfg.lambda.value_or(default_lambda(design.p()));
  const LassoProblem prob(design, y, lambda, sigma);
  const LassoSolution sol = solve(prob, cfg.solver);
  const UniquenessVerdict u = uniqueness_certificate(prob, sol);

  ExperimentReport rep;
  rep.experiment = "solve";
  rep.config = ordered_json{{"design", design_json(design)}, {"lambda", lambda}, {"sigma", sigma},
                            {"solver", solver_json(cfg.solver)}};
  auto& s = rep.summary;
  s["objective"] = sol.objective;
  s["kkt_residual"] = sol.kkt_residual;
  s["iterations"] = sol.iterations;
  s["converged"] = sol.converged;
  s["support"] = support_json(sol.support);
  s["dantzig_feasibility"] = dantzig_feasibility(prob, sol);
  s["unique"] = ordered_json{{"certified", u.unique}, {"gram_nonsingular", u.gram_nonsingular},
                             {"off_support_margin", u.off_support_margin}};
  s["beta_hat"] = vec_json(sol.beta_hat);
  rep.assertions.push_back(make_assertion("converged", sol.converged, "kkt " + fmt(sol.kkt_residual)));
  return rep;
}

ExperimentReport tropp_report(const DesignMatrix& design, const ExperimentConfig& cfg) {
  check_common(cfg);
  const Index s = cfg.s.value_or(8);
  ExperimentReport rep;
  rep.experiment = "tropp";
  rep.config = ordered_json{{"design", design_json(design)}, {"s", s}, {"trials", cfg.trials}, {"seed", cfg.seed}};
  TroppEstimate e;
  try {
    e = tropp_moment_estimate(design, s, cfg.trials, cfg.seed);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  rep.summary = to_json(e);
  rep.assertions.push_back(make_assertion("moment of ||X_I^* X_I - Id|| below its bound", e.empirical_q_norm <= e.bound,
                                          fmt(e.empirical_q_norm) + " vs " + fmt(e.bound)));
  rep.assertions.push_back(make_assertion("moment of max ||X_I^* X_i|| below its bound",
                                          e.companion_q_norm <= e.companion_bound,
                                          fmt(e.companion_q_norm) + " vs " + fmt(e.companion_bound)));
  return rep;
}

ExperimentReport lemma36_report(const DesignMatrix& design, Index column, const ExperimentConfig& cfg) {
  check_common(cfg);
  const Index s = cfg.s.value_or(5);
  require(s >= 1 && s <= design.p(), "S must satisfy 1 <= S <= p");
  require(column >= 0 && column < design.p(), "column out of range");
  const TailCheck t = lemma36_tail_check(design, s, column, cfg.trials, cfg.seed);
  ExperimentReport rep;
  rep.experiment = "lemma36";
  rep.config = ordered_json{{"design", design_json(design)}, {"s", s}, {"column", column},
                            {"trials", cfg.trials}, {"seed", cfg.seed}};
  rep.summary = to_json(t);
  rep.assertions.push_back(make_assertion("tail within 3 standard errors of its bound", t.ok,
                                          fmt(t.empirical) + " vs " + fmt(t.bound)));
  return rep;
}

}  // namespace lassolab
