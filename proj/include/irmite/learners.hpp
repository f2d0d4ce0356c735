#pragma once

// Linear base-learners with square loss: closed-form least squares and the
// IRMv1 objective (sum of per-domain risks plus a squared-gradient penalty on a
// fixed scalar multiplier w = 1) minimized by full-batch gradient descent.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "irmite/error.hpp"
#include "irmite/numerics.hpp"

namespace irmite {

/// Per-column affine map z = (x - mean) / std. Columns flagged raw keep
/// mean 0 and std 1; columns with no spread get std 1.
struct Standardizer {
  Vector mean;
  Vector std;

  static Standardizer fit(const Matrix& x, const std::vector<bool>& raw_columns = {}) {
    require(x.rows() >= 1, ErrorCode::EmptyInput, "cannot standardize an empty matrix");
    require(raw_columns.empty() || raw_columns.size() == static_cast<std::size_t>(x.cols()),
            ErrorCode::DimensionMismatch, "raw column mask has the wrong length");
    Standardizer s;
    s.mean = x.colwise().mean().transpose();
    s.std.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!raw_columns.empty() && raw_columns[static_cast<std::size_t>(j)]) {
        s.mean(j) = 0.0;
        s.std(j) = 1.0;
        continue;
      }
      const double sd = std::sqrt((x.col(j).array() - s.mean(j)).square().mean());
      s.std(j) = sd > 1e-12 * std::max(1.0, std::abs(s.mean(j))) ? sd : 1.0;
    }
    return s;
  }

  static Standardizer identity(Eigen::Index p) {
    return {Vector::Zero(p), Vector::Ones(p)};
  }

  Eigen::Index dim() const { return mean.size(); }

  Matrix apply(const Matrix& x) const {
    require(x.cols() == dim(), ErrorCode::DimensionMismatch, "feature dimension does not match the model");
    return (x.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
  }
};

/// predict(x) = standardize(x)^T w + b.
struct LinearModel {
  Vector w;
  double b = 0.0;
  Standardizer standardizer;

  Eigen::Index dim() const { return w.size(); }

  Vector predict(const Matrix& x) const {
    return (standardizer.apply(x) * w).array() + b;
  }

  /// Coefficients in the original feature units: predict(x) = x^T w_raw + b_raw.
  Vector raw_weights() const { return w.cwiseQuotient(standardizer.std); }
  double raw_intercept() const { return b - raw_weights().dot(standardizer.mean); }
};

inline void to_json(nlohmann::json& j, const LinearModel& m) {
  j = nlohmann::json{{"weights", std::vector<double>(m.w.begin(), m.w.end())},
                     {"intercept", m.b},
                     {"means", std::vector<double>(m.standardizer.mean.begin(), m.standardizer.mean.end())},
                     {"stds", std::vector<double>(m.standardizer.std.begin(), m.standardizer.std.end())}};
}

inline void from_json(const nlohmann::json& j, LinearModel& m) {
  auto to_vector = [](const std::vector<double>& v) {
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  try {
    m.w = to_vector(j.at("weights").get<std::vector<double>>());
    m.b = j.at("intercept").get<double>();
    m.standardizer.mean = to_vector(j.at("means").get<std::vector<double>>());
    m.standardizer.std = to_vector(j.at("stds").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("linear model JSON: ") + e.what());
  }
  require(m.w.size() == m.standardizer.mean.size() && m.w.size() == m.standardizer.std.size(),
          ErrorCode::SchemaError, "linear model JSON arrays differ in length");
  require((m.standardizer.std.array() > 0.0).all(), ErrorCode::SchemaError, "linear model stds must be positive");
}

/// Ridge-regularized least squares on standardized features. The intercept is
/// not penalized (handled by centering). ridge defaults to 1e-8.
inline LinearModel ols_fit(const Matrix& x, const Vector& y, double ridge = 1e-8,
                           const std::vector<bool>& raw_columns = {}) {
  require(x.rows() >= 1, ErrorCode::EmptyInput, "ols_fit needs at least one row");
  require(x.rows() == y.size(), ErrorCode::DimensionMismatch, "ols_fit: x and y row counts differ");
  require(ridge >= 0.0, ErrorCode::InvalidArg, "ols_fit: ridge must be >= 0");

  LinearModel m;
  m.standardizer = Standardizer::fit(x, raw_columns);
  const Matrix z = m.standardizer.apply(x);
  const Vector z_mean = z.colwise().mean().transpose();
  const double y_mean = y.mean();
  const Matrix zc = z.rowwise() - z_mean.transpose();
  const Vector yc = y.array() - y_mean;

  Matrix gram = zc.transpose() * zc;
  gram.diagonal().array() += ridge;
  m.w = solve_spd(gram, zc.transpose() * yc);
  m.b = y_mean - z_mean.dot(m.w);
  return m;
}

/// Mean squared error of the model on (x, y).
inline double risk(const LinearModel& model, const Matrix& x, const Vector& y) {
  require(x.rows() >= 1, ErrorCode::EmptyInput, "risk of an empty sample");
  require(x.rows() == y.size(), ErrorCode::DimensionMismatch, "risk: x and y row counts differ");
  return (model.predict(x) - y).squaredNorm() / static_cast<double>(y.size());
}

/// Squared derivative of the domain risk of s * predict(x) with respect to the
/// scalar s at s = 1, i.e. ((2/m) sum (f_i - y_i) f_i)^2.
inline double irm_penalty(const LinearModel& model, const Matrix& x, const Vector& y) {
  require(x.rows() >= 1, ErrorCode::EmptyInput, "irm_penalty of an empty sample");
  require(x.rows() == y.size(), ErrorCode::DimensionMismatch, "irm_penalty: x and y row counts differ");
  const Vector f = model.predict(x);
  const double d = 2.0 * (f - y).dot(f) / static_cast<double>(y.size());
  return d * d;
}

struct IrmConfig {
  double lambda = 100.0;
  int steps = 5000;
  double lr = 1e-2;
  int anneal_step = 500;
  // Full-batch descent from a zero start draws no randomness; the seed is kept
  // so configs round-trip and a stochastic variant can use it.
  std::uint64_t seed = 0;

  void validate() const {
    require(lambda >= 0.0, ErrorCode::ConfigError, "irm.lambda must be >= 0");
    require(steps >= 1, ErrorCode::ConfigError, "irm.steps must be >= 1");
    require(lr > 0.0, ErrorCode::ConfigError, "irm.lr must be > 0");
    require(anneal_step >= 0 && anneal_step <= steps, ErrorCode::ConfigError,
            "irm.anneal_step must lie in [0, steps]");
  }

  /// Penalty weight in force at a given iteration.
  double lambda_at(int step) const { return step < anneal_step ? 1.0 : lambda; }
};

inline void to_json(nlohmann::json& j, const IrmConfig& c) {
  j = nlohmann::json{{"lambda", c.lambda}, {"steps", c.steps}, {"lr", c.lr},
                     {"anneal_step", c.anneal_step}, {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, IrmConfig& c) {
  c.lambda = j.value("lambda", c.lambda);
  c.steps = j.value("steps", c.steps);
  c.lr = j.value("lr", c.lr);
  c.anneal_step = j.value("anneal_step", c.anneal_step);
  c.seed = j.value("seed", c.seed);
}

struct DomainData {
  Matrix x;
  Vector y;
};

/// IRMv1 objective over already-standardized domains, as a function of
/// theta = [w; b]:
///
///   L(theta) = (sum_e R_e + lambda * D_e^2) / max(1, lambda)
///
/// with R_e the domain MSE and D_e = (2/m_e) sum_i (f_i - y_i) f_i.
class IrmObjective {
 public:
  IrmObjective(std::vector<Matrix> z, std::vector<Vector> y) : z_(std::move(z)), y_(std::move(y)) {
    require(!z_.empty() && z_.size() == y_.size(), ErrorCode::InvalidArg, "IrmObjective needs matching domains");
  }

  Eigen::Index dim() const { return z_.front().cols(); }

  struct Terms {
    double value = 0.0;
    double risk_sum = 0.0;
    double penalty_sum = 0.0;
  };

  /// Objective terms; fills grad (length dim() + 1) when non-null.
  Terms evaluate(const Vector& theta, double lambda, Vector* grad = nullptr) const {
    const Eigen::Index p = dim();
    const auto w = theta.head(p);
    const double b = theta(p);
    const double scale = 1.0 / std::max(1.0, lambda);
    Terms terms;
    if (grad) grad->setZero(p + 1);
    for (std::size_t e = 0; e < z_.size(); ++e) {
      const Matrix& z = z_[e];
      const Vector& y = y_[e];
      const double m = static_cast<double>(y.size());
      const Vector f = (z * w).array() + b;
      const Vector r = f - y;
      const double risk_e = r.squaredNorm() / m;
      const double d_e = 2.0 * r.dot(f) / m;
      terms.risk_sum += risk_e;
      terms.penalty_sum += d_e * d_e;
      if (grad) {
        // dL/df_i = (2/m) r_i + lambda * 2 D_e * (2/m)(2 f_i - y_i)
        const Vector coef = (2.0 / m) * (r + (2.0 * lambda * d_e) * (2.0 * f - y));
        grad->head(p).noalias() += scale * (z.transpose() * coef);
        (*grad)(p) += scale * coef.sum();
      }
    }
    terms.value = scale * (terms.risk_sum + lambda * terms.penalty_sum);
    return terms;
  }

 private:
  std::vector<Matrix> z_;
  std::vector<Vector> y_;
};

struct IrmFitOptions {
  std::vector<bool> raw_columns;
  // When set, receives the objective value before every update.
  std::vector<double>* trace = nullptr;
};

/// IRMv1 for a linear predictor.
///
/// Features are standardized with pooled statistics of all domains, and the
/// target is centered and scaled by its pooled mean and standard deviation so
/// the default step size works regardless of outcome magnitude; the returned
/// model maps back to the original target units. Gradient descent starts from
/// zero and uses penalty weight 1 before anneal_step, cfg.lambda afterwards.
/// cfg.lr is the initial step; it is halved whenever a step would increase
/// the objective, so the objective never rises within a penalty phase. A phase
/// in which no step can lower the objective holds its parameters until the
/// penalty weight changes.
inline LinearModel irm_fit(const std::vector<DomainData>& domains, const IrmConfig& cfg,
                           const IrmFitOptions& opts = {}) {
  cfg.validate();
  require(!domains.empty(), ErrorCode::EmptyInput, "irm_fit needs at least one domain");
  const Eigen::Index p = domains.front().x.cols();
  Eigen::Index n = 0;
  for (const auto& dom : domains) {
    require(dom.x.rows() >= 1, ErrorCode::EmptyDomainGroup, "irm_fit got an empty domain");
    require(dom.x.cols() == p, ErrorCode::DimensionMismatch, "irm_fit domains differ in feature dimension");
    require(dom.x.rows() == dom.y.size(), ErrorCode::DimensionMismatch, "irm_fit domain x/y row counts differ");
    n += dom.x.rows();
  }

  Matrix pooled_x(n, p);
  Vector pooled_y(n);
  Eigen::Index row = 0;
  for (const auto& dom : domains) {
    pooled_x.middleRows(row, dom.x.rows()) = dom.x;
    pooled_y.segment(row, dom.y.size()) = dom.y;
    row += dom.x.rows();
  }

  LinearModel model;
  model.standardizer = Standardizer::fit(pooled_x, opts.raw_columns);
  const double y_mean = pooled_y.mean();
  const double y_sd = std::sqrt((pooled_y.array() - y_mean).square().mean());
  const double y_scale = y_sd > 1e-12 * std::max(1.0, std::abs(y_mean)) ? y_sd : 1.0;

  std::vector<Matrix> z;
  std::vector<Vector> ys;
  for (const auto& dom : domains) {
    z.push_back(model.standardizer.apply(dom.x));
    ys.push_back((dom.y.array() - y_mean) / y_scale);
  }
  const IrmObjective objective(std::move(z), std::move(ys));

  // Step halving: a step that would raise the objective is retried with half
  // the rate, and the reduced rate is kept from then on.
  Vector theta = Vector::Zero(p + 1);
  Vector grad(p + 1);
  Vector candidate(p + 1);
  Vector candidate_grad(p + 1);
  double rate = cfg.lr;
  double cached_lambda = cfg.lambda_at(0);
  bool stalled = false;
  auto current = objective.evaluate(theta, cached_lambda, &grad);
  if (opts.trace) opts.trace->reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    const double lambda = cfg.lambda_at(step);
    if (lambda != cached_lambda) {
      cached_lambda = lambda;
      current = objective.evaluate(theta, lambda, &grad);
      if (stalled) rate = cfg.lr;
      stalled = false;
    }
    if (!std::isfinite(current.value) || !grad.allFinite())
      throw Error(ErrorCode::NonFinite, "irm_fit objective is not finite at step " + std::to_string(step));
    if (opts.trace) opts.trace->push_back(current.value);
    // No step of any usable size lowers the objective: this phase has
    // converged to rounding level, so hold theta until the weight changes.
    if (stalled) continue;
    for (;;) {
      candidate = theta - rate * grad;
      const auto next = objective.evaluate(candidate, lambda, &candidate_grad);
      if (std::isfinite(next.value) && next.value <= current.value) {
        theta.swap(candidate);
        grad.swap(candidate_grad);
        current = next;
        break;
      }
      rate *= 0.5;
      if (rate < 1e-12 * cfg.lr) {
        stalled = true;
        break;
      }
    }
  }
  if (!theta.allFinite()) throw Error(ErrorCode::NonFinite, "irm_fit produced non-finite parameters");

  model.w = y_scale * theta.head(p);
  model.b = y_mean + y_scale * theta(p);
  return model;
}

}  // namespace irmite
