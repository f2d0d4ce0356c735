#pragma once

// Experiment orchestration: one repetition = generate -> split into domains ->
// fit every requested estimator -> score on the test rows. Sweeps repeat this
// over a grid of group separations or feature dimensions.
//
// Seeds: root_seed -> Rng::split("rep", r) -> named children ("covariance",
// "params", "train/treatment", ..., "domain-split", "probe"). The per-rep seed
// does not depend on the sweep point, so every point of a sweep reuses the
// same random numbers for a given rep.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "irmite/dataset_csv.hpp"
#include "irmite/datagen.hpp"
#include "irmite/domains.hpp"
#include "irmite/error.hpp"
#include "irmite/evaluation.hpp"
#include "irmite/learners.hpp"
#include "irmite/metalearners.hpp"

namespace irmite {

enum class EstimatorId { IRM2, IRM1, OLS_LR2, OLS_LR1 };

inline std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::IRM2: return "IRM2";
    case EstimatorId::IRM1: return "IRM1";
    case EstimatorId::OLS_LR2: return "OLS_LR2";
    case EstimatorId::OLS_LR1: return "OLS_LR1";
  }
  return "?";
}

inline EstimatorId parse_estimator(const std::string& name) {
  for (auto id : {EstimatorId::IRM2, EstimatorId::IRM1, EstimatorId::OLS_LR2, EstimatorId::OLS_LR1})
    if (to_string(id) == name) return id;
  throw Error(ErrorCode::ConfigError, "unknown estimator '" + name + "'");
}

inline const std::vector<EstimatorId>& all_estimators() {
  static const std::vector<EstimatorId> ids{EstimatorId::IRM2, EstimatorId::IRM1, EstimatorId::OLS_LR2,
                                            EstimatorId::OLS_LR1};
  return ids;
}

struct ExperimentConfig {
  GenSpec spec = GenSpec::symmetric(35, FeatureModel::ModelA, OutcomeModel::Quadratic, 0.1);
  std::size_t n_tr = 200;
  std::size_t n_te = 100;
  std::size_t n_e = 3;
  std::size_t reps = 10;
  IrmConfig irm;
  std::vector<EstimatorId> estimators = all_estimators();
  std::uint64_t root_seed = 0;
  double ols_ridge = 1e-8;
  std::size_t n_probe = 2000;
  // Sweep grids; empty means the built-in defaults.
  std::vector<double> separations;
  std::vector<std::size_t> dims;
  // Mean scale for dimension sweeps; unset means 1 (linear) or 0.1 (quadratic).
  std::optional<double> mu_scale;
  // Off by default so that re-runs produce byte-identical CSV.
  bool record_wall_time = false;
  unsigned threads = 0;

  void validate() const {
    spec.validate();
    require(reps >= 1, ErrorCode::ConfigError, "reps must be >= 1");
    require(!estimators.empty(), ErrorCode::ConfigError, "estimators must not be empty");
    require(n_tr >= 1 && n_te >= 1, ErrorCode::ConfigError, "n_tr and n_te must be >= 1");
    require(n_e >= 1, ErrorCode::ConfigError, "n_e must be >= 1");
    require(n_probe >= 100, ErrorCode::ConfigError, "n_probe must be >= 100");
    require(ols_ridge >= 0.0, ErrorCode::ConfigError, "ols_ridge must be >= 0");
    irm.validate();
  }
};

inline std::vector<double> default_separations(OutcomeModel om) {
  if (om == OutcomeModel::Quadratic) return {0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6};
  return {0.0, 0.5, 1.0, 2.0, 4.0};
}

inline std::vector<std::size_t> default_dims() { return {5, 10, 20, 35, 50}; }

inline double default_mu_scale(OutcomeModel om) { return om == OutcomeModel::Linear ? 1.0 : 0.1; }

namespace detail {

inline FeatureModel parse_feature_model(const std::string& s) {
  if (s == "A" || s == "ModelA") return FeatureModel::ModelA;
  if (s == "B" || s == "ModelB") return FeatureModel::ModelB;
  throw Error(ErrorCode::ConfigError, "feature_model must be A or B, got '" + s + "'");
}

inline OutcomeModel parse_outcome_model(const std::string& s) {
  if (s == "linear" || s == "Linear") return OutcomeModel::Linear;
  if (s == "quadratic" || s == "Quadratic") return OutcomeModel::Quadratic;
  throw Error(ErrorCode::ConfigError, "outcome_model must be linear or quadratic, got '" + s + "'");
}

inline Vector json_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// Fields mirror ExperimentConfig. Means come either as explicit "mu0"/"mu1"
/// arrays or as "mu_scale" (mu0 = -scale, mu1 = +scale in every coordinate).
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("spec")) {
      const auto& s = j.at("spec");
      GenSpec& g = cfg.spec;
      g.d = s.value("d", g.d);
      if (s.contains("feature_model")) g.feature_model = detail::parse_feature_model(s.at("feature_model"));
      if (s.contains("outcome_model")) g.outcome_model = detail::parse_outcome_model(s.at("outcome_model"));
      g.sigma_noise = s.value("sigma_noise", g.sigma_noise);
      g.coeff_lo = s.value("coeff_lo", g.coeff_lo);
      g.coeff_hi = s.value("coeff_hi", g.coeff_hi);
      g.treatment_p = s.value("treatment_p", g.treatment_p);
      const auto d = static_cast<Eigen::Index>(g.d);
      if (s.contains("mu_scale")) cfg.mu_scale = s.at("mu_scale").get<double>();
      const double scale = cfg.mu_scale.value_or(default_mu_scale(g.outcome_model));
      g.mu0 = s.contains("mu0") ? detail::json_vector(s.at("mu0")) : Vector::Constant(d, -scale);
      g.mu1 = s.contains("mu1") ? detail::json_vector(s.at("mu1")) : Vector::Constant(d, scale);
    }
    cfg.n_tr = j.value("n_tr", cfg.n_tr);
    cfg.n_te = j.value("n_te", cfg.n_te);
    cfg.n_e = j.value("n_e", cfg.n_e);
    cfg.reps = j.value("reps", cfg.reps);
    if (j.contains("irm")) cfg.irm = j.at("irm").get<IrmConfig>();
    if (j.contains("estimators")) {
      cfg.estimators.clear();
      for (const auto& name : j.at("estimators")) cfg.estimators.push_back(parse_estimator(name.get<std::string>()));
    }
    cfg.root_seed = j.value("root_seed", cfg.root_seed);
    cfg.ols_ridge = j.value("ols_ridge", cfg.ols_ridge);
    cfg.n_probe = j.value("n_probe", cfg.n_probe);
    if (j.contains("separations")) cfg.separations = j.at("separations").get<std::vector<double>>();
    if (j.contains("dims")) cfg.dims = j.at("dims").get<std::vector<std::size_t>>();
    cfg.record_wall_time = j.value("record_wall_time", cfg.record_wall_time);
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return cfg;
}

/// Same spec with mu0 = -scale * 1 and mu1 = +scale * 1 in dimension d.
inline GenSpec with_symmetric_means(GenSpec spec, std::size_t d, double scale) {
  spec.d = d;
  spec.mu0 = Vector::Constant(static_cast<Eigen::Index>(d), -scale);
  spec.mu1 = Vector::Constant(static_cast<Eigen::Index>(d), scale);
  return spec;
}

struct ResultRecord {
  std::string sweep;
  double x_value = 0.0;
  std::optional<double> measured_accuracy;
  std::string estimator;
  std::size_t rep = 0;
  std::optional<double> sqrt_pehe;  // empty on failure
  double wall_time_s = 0.0;
  std::string error;

  bool ok() const { return sqrt_pehe.has_value(); }
};

inline Rng rep_rng(const ExperimentConfig& cfg, std::size_t rep) {
  return Rng(cfg.root_seed).split("rep", rep);
}

/// Data and domain split for one repetition; shared by every estimator.
struct RepData {
  GeneratedData data;
  DomainAssignment assign;
};

inline RepData prepare_rep(const ExperimentConfig& cfg, const GenSpec& spec, std::size_t rep) {
  const Rng rng = rep_rng(cfg, rep);
  RepData r;
  r.data = generate(rng, spec, cfg.n_tr, cfg.n_te);
  r.assign = split_populated(rng, r.data.train, cfg.n_e);
  return r;
}

inline IteEstimator fit_estimator(EstimatorId id, const RepData& rd, const ExperimentConfig& cfg) {
  const Dataset& train = rd.data.train;
  switch (id) {
    case EstimatorId::IRM2: return fit_t_learner(train, rd.assign, BaseLearner::IRM, cfg.irm, cfg.ols_ridge);
    case EstimatorId::IRM1: return fit_s_learner(train, rd.assign, BaseLearner::IRM, cfg.irm, cfg.ols_ridge);
    case EstimatorId::OLS_LR2: return fit_t_learner(train, rd.assign, BaseLearner::OLS, cfg.irm, cfg.ols_ridge);
    case EstimatorId::OLS_LR1: return fit_s_learner(train, rd.assign, BaseLearner::OLS, cfg.irm, cfg.ols_ridge);
  }
  throw Error(ErrorCode::InvalidArg, "unknown estimator");
}

namespace detail {

inline std::string error_tag(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code()));
  return "Exception";
}

/// One repetition at one sweep point; records follow cfg.estimators order.
inline std::vector<ResultRecord> run_rep(const ExperimentConfig& cfg, const GenSpec& spec, std::size_t rep,
                                         const std::string& sweep, double x_value, bool measure_accuracy) {
  using Clock = std::chrono::steady_clock;
  std::vector<ResultRecord> out;
  for (auto id : cfg.estimators) {
    ResultRecord r;
    r.sweep = sweep;
    r.x_value = x_value;
    r.estimator = to_string(id);
    r.rep = rep;
    out.push_back(r);
  }

  std::optional<RepData> rd;
  try {
    rd = prepare_rep(cfg, spec, rep);
    if (measure_accuracy) {
      Rng probe = rep_rng(cfg, rep).split("probe");
      const double acc = group_classification_accuracy(probe, spec, rd->data.cov, cfg.n_probe);
      for (auto& r : out) r.measured_accuracy = acc;
    }
  } catch (const std::exception& e) {
    for (auto& r : out) r.error = error_tag(e);
    return out;
  }

  for (std::size_t k = 0; k < cfg.estimators.size(); ++k) {
    const auto start = Clock::now();
    try {
      const IteEstimator est = fit_estimator(cfg.estimators[k], *rd, cfg);
      out[k].sqrt_pehe = evaluate_estimator(est, rd->data.test).sqrt_pehe;
    } catch (const std::exception& e) {
      out[k].error = error_tag(e);
    }
    if (cfg.record_wall_time)
      out[k].wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  }
  return out;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  unsigned workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

struct SweepPoint {
  GenSpec spec;
  double x_value;
};

/// Rows come out in (sweep point, estimator, rep) order whatever the
/// completion order of the workers.
inline std::vector<ResultRecord> run_grid(const ExperimentConfig& cfg, const std::vector<SweepPoint>& points,
                                          const std::string& sweep, bool measure_accuracy) {
  const std::size_t reps = cfg.reps;
  std::vector<std::vector<ResultRecord>> cells(points.size() * reps);
  parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
    const auto& pt = points[i / reps];
    cells[i] = run_rep(cfg, pt.spec, i % reps, sweep, pt.x_value, measure_accuracy);
  });
  std::vector<ResultRecord> out;
  out.reserve(cells.size() * cfg.estimators.size());
  for (std::size_t p = 0; p < points.size(); ++p)
    for (std::size_t k = 0; k < cfg.estimators.size(); ++k)
      for (std::size_t r = 0; r < reps; ++r) out.push_back(cells[p * reps + r][k]);
  return out;
}

}  // namespace detail

/// A single repetition of the configured experiment (x_value = d).
inline std::vector<ResultRecord> run_once(const ExperimentConfig& cfg, std::size_t rep) {
  cfg.validate();
  return detail::run_rep(cfg, cfg.spec, rep, "run", static_cast<double>(cfg.spec.d), false);
}

/// All repetitions of the configured experiment.
inline std::vector<ResultRecord> run_all(const ExperimentConfig& cfg) {
  cfg.validate();
  return detail::run_grid(cfg, {{cfg.spec, static_cast<double>(cfg.spec.d)}}, "run", false);
}

/// Separation sweep at the configured d: mu0 = -s, mu1 = +s per coordinate.
/// Each rep also records the measured group classification accuracy.
inline std::vector<ResultRecord> sweep_accuracy(const ExperimentConfig& cfg, const std::vector<double>& separations) {
  cfg.validate();
  require(!separations.empty(), ErrorCode::ConfigError, "sweep_accuracy needs at least one separation");
  std::vector<detail::SweepPoint> points;
  for (double s : separations) points.push_back({with_symmetric_means(cfg.spec, cfg.spec.d, s), s});
  return detail::run_grid(cfg, points, "accuracy", true);
}

inline std::vector<ResultRecord> sweep_accuracy(const ExperimentConfig& cfg) {
  return sweep_accuracy(cfg, cfg.separations.empty() ? default_separations(cfg.spec.outcome_model) : cfg.separations);
}

inline std::vector<ResultRecord> sweep_dimension(const ExperimentConfig& cfg, const std::vector<std::size_t>& dims) {
  cfg.validate();
  require(!dims.empty(), ErrorCode::ConfigError, "sweep_dimension needs at least one dimension");
  const double scale = cfg.mu_scale.value_or(default_mu_scale(cfg.spec.outcome_model));
  std::vector<detail::SweepPoint> points;
  for (std::size_t d : dims) {
    require(d >= 1, ErrorCode::ConfigError, "dimensions must be >= 1");
    points.push_back({with_symmetric_means(cfg.spec, d, scale), static_cast<double>(d)});
  }
  return detail::run_grid(cfg, points, "dimension", false);
}

inline std::vector<ResultRecord> sweep_dimension(const ExperimentConfig& cfg) {
  return sweep_dimension(cfg, cfg.dims.empty() ? default_dims() : cfg.dims);
}

inline bool any_failed(const std::vector<ResultRecord>& records) {
  return std::any_of(records.begin(), records.end(), [](const ResultRecord& r) { return !r.ok(); });
}

// ---- CSV ----

inline constexpr std::string_view kResultsHeader =
    "sweep,x_value,measured_accuracy,estimator,rep,sqrt_pehe,wall_time_s,error";

inline void write_results_csv(std::ostream& os, const std::vector<ResultRecord>& records) {
  os << kResultsHeader << '\n';
  for (const auto& r : records) {
    os << r.sweep << ',' << format_real(r.x_value) << ','
       << (r.measured_accuracy ? format_real(*r.measured_accuracy) : "") << ',' << r.estimator << ',' << r.rep
       << ',' << (r.sqrt_pehe ? format_real(*r.sqrt_pehe) : "") << ',' << format_real(r.wall_time_s) << ','
       << r.error << '\n';
  }
}

inline std::vector<ResultRecord> read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::SchemaError, "results CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) throw Error(ErrorCode::SchemaError, "unexpected results CSV header: " + line);
  std::vector<ResultRecord> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw Error(ErrorCode::SchemaError, "wrong field count on line " + std::to_string(line_no));
    ResultRecord r;
    r.sweep = f[0];
    r.x_value = parse_real(f[1]);
    if (!f[2].empty()) r.measured_accuracy = parse_real(f[2]);
    r.estimator = f[3];
    r.rep = static_cast<std::size_t>(parse_real(f[4]));
    if (!f[5].empty()) r.sqrt_pehe = parse_real(f[5]);
    r.wall_time_s = parse_real(f[6]);
    r.error = f[7];
    if (r.sqrt_pehe && !(*r.sqrt_pehe >= 0.0))
      throw Error(ErrorCode::SchemaError, "negative sqrt_pehe on line " + std::to_string(line_no));
    out.push_back(std::move(r));
  }
  return out;
}

// ---- Summaries ----

struct SummaryRow {
  std::string sweep;
  double x_value = 0.0;
  std::string estimator;
  std::optional<double> mean_accuracy;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
};

/// Mean and (population) standard deviation of sqrt_pehe over successful reps,
/// per (x_value, estimator). Order follows first appearance in the input.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records) {
  std::vector<SummaryRow> rows;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> accs;
  for (const auto& r : records) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& s) {
      return s.sweep == r.sweep && s.x_value == r.x_value && s.estimator == r.estimator;
    });
    if (it == rows.end()) {
      rows.push_back({r.sweep, r.x_value, r.estimator, std::nullopt});
      values.emplace_back();
      accs.emplace_back();
      it = rows.end() - 1;
    }
    const auto k = static_cast<std::size_t>(it - rows.begin());
    if (r.measured_accuracy) accs[k].push_back(*r.measured_accuracy);
    if (r.ok())
      values[k].push_back(*r.sqrt_pehe);
    else
      ++it->n_failed;
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto& row = rows[k];
    const auto& v = values[k];
    row.n_ok = v.size();
    if (!v.empty()) {
      double sum = 0.0;
      for (double x : v) sum += x;
      row.mean = sum / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - row.mean) * (x - row.mean);
      row.std = std::sqrt(ss / static_cast<double>(v.size()));
    }
    if (!accs[k].empty()) {
      double sum = 0.0;
      for (double a : accs[k]) sum += a;
      row.mean_accuracy = sum / static_cast<double>(accs[k].size());
    }
  }
  return rows;
}

struct DifferenceRow {
  double x_value = 0.0;
  std::optional<double> mean_accuracy;
  double mean_difference = 0.0;  // mean over reps of (baseline - candidate)
  std::size_t n = 0;
};

/// Per sweep point, the rep-paired mean of sqrt_pehe(baseline) - sqrt_pehe(candidate).
inline std::vector<DifferenceRow> paired_differences(const std::vector<ResultRecord>& records,
                                                     const std::string& baseline, const std::string& candidate) {
  std::map<std::pair<double, std::size_t>, std::pair<std::optional<double>, std::optional<double>>> paired;
  std::map<double, std::vector<double>> accuracy;
  std::vector<double> order;
  for (const auto& r : records) {
    if (std::find(order.begin(), order.end(), r.x_value) == order.end()) order.push_back(r.x_value);
    if (!r.ok()) continue;
    auto& slot = paired[{r.x_value, r.rep}];
    if (r.estimator == baseline) slot.first = r.sqrt_pehe;
    if (r.estimator == candidate) slot.second = r.sqrt_pehe;
    if (r.measured_accuracy && r.estimator == candidate) accuracy[r.x_value].push_back(*r.measured_accuracy);
  }
  std::vector<DifferenceRow> out;
  for (double x : order) {
    DifferenceRow row;
    row.x_value = x;
    double sum = 0.0;
    for (const auto& [key, pair] : paired)
      if (key.first == x && pair.first && pair.second) {
        sum += *pair.first - *pair.second;
        ++row.n;
      }
    if (row.n == 0) continue;
    row.mean_difference = sum / static_cast<double>(row.n);
    if (auto it = accuracy.find(x); it != accuracy.end() && !it->second.empty()) {
      double s = 0.0;
      for (double a : it->second) s += a;
      row.mean_accuracy = s / static_cast<double>(it->second.size());
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace irmite
