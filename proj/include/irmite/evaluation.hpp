#pragma once

// Effect-estimation error and the treatment-group separability probe.

#include <cmath>
#include <concepts>
#include <vector>

#include "irmite/datagen.hpp"
#include "irmite/error.hpp"
#include "irmite/metalearners.hpp"
#include "irmite/numerics.hpp"

namespace irmite {

struct EvalReport {
  double pehe = 0.0;
  double sqrt_pehe = 0.0;
  std::size_t n = 0;
};

/// Mean squared difference between true and estimated effects.
inline EvalReport pehe(const Vector& ite_true, const Vector& ite_hat) {
  require(ite_true.size() == ite_hat.size(), ErrorCode::LengthMismatch, "pehe: vector lengths differ");
  require(ite_true.size() >= 1, ErrorCode::EmptyInput, "pehe of an empty sample");
  EvalReport r;
  r.n = static_cast<std::size_t>(ite_true.size());
  r.pehe = (ite_true - ite_hat).squaredNorm() / static_cast<double>(r.n);
  r.sqrt_pehe = std::sqrt(r.pehe);
  return r;
}

template <class P>
concept IteModel = requires(const P& p, const Matrix& x) {
  { p(x) } -> std::convertible_to<Vector>;
};

/// Scores any effect predictor x -> ite_hat on the test rows.
template <IteModel P>
EvalReport evaluate_estimator(const P& predictor, const Dataset& test) {
  if (!test.oracle) throw Error(ErrorCode::MissingOracle, "test data carries no true effects");
  return pehe(test.oracle->ite, predictor(test.x));
}

inline EvalReport evaluate_estimator(const IteEstimator& est, const Dataset& test) {
  return evaluate_estimator([&est](const Matrix& x) { return predict_ite(est, x); }, test);
}

struct ProbeConfig {
  int steps = 2000;
  double lr = 0.1;
  double l2 = 1e-4;
};

/// L2-regularized logistic regression fitted by full-batch gradient descent on
/// standardized features. Returns held-out accuracy.
inline double logistic_holdout_accuracy(const Matrix& x_train, const std::vector<int>& t_train,
                                        const Matrix& x_test, const std::vector<int>& t_test,
                                        const ProbeConfig& cfg = {}) {
  const Eigen::Index n = x_train.rows();
  const Eigen::Index d = x_train.cols();
  const Vector mean = x_train.colwise().mean().transpose();
  Vector sd = ((x_train.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
  for (auto& s : sd) s = s > 1e-12 ? s : 1.0;
  auto standardize = [&](const Matrix& x) -> Matrix {
    return (x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
  };
  const Matrix z = standardize(x_train);
  Vector target(n);
  for (Eigen::Index i = 0; i < n; ++i) target(i) = t_train[static_cast<std::size_t>(i)];

  Vector w = Vector::Zero(d);
  double b = 0.0;
  for (int step = 0; step < cfg.steps; ++step) {
    const Vector logits = (z * w).array() + b;
    const Vector prob = (1.0 / (1.0 + (-logits.array()).exp())).matrix();
    const Vector err = prob - target;
    const Vector gw = z.transpose() * err / static_cast<double>(n) + 2.0 * cfg.l2 * w;
    const double gb = err.mean();
    w -= cfg.lr * gw;
    b -= cfg.lr * gb;
  }

  const Vector logits = (standardize(x_test) * w).array() + b;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    correct += (logits(i) >= 0.0 ? 1 : 0) == t_test[static_cast<std::size_t>(i)] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(logits.size());
}

/// How well x separates the two treatment groups: a fresh sample with
/// t ~ Bernoulli(0.5) and features from the spec's model, first half used to
/// fit the probe, second half to score it.
inline double group_classification_accuracy(Rng& rng, const GenSpec& spec, const CovarianceSet& cov,
                                            std::size_t n_probe, const ProbeConfig& cfg = {}) {
  require(n_probe >= 100, ErrorCode::InvalidArg, "group_classification_accuracy needs n_probe >= 100");
  const std::vector<int> t = gen_treatment(rng, n_probe, 0.5);
  const Matrix x = gen_features(rng, spec, cov, t);
  const std::size_t half = n_probe / 2;
  const auto h = static_cast<Eigen::Index>(half);
  const std::vector<int> t_train(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(half));
  const std::vector<int> t_test(t.begin() + static_cast<std::ptrdiff_t>(half), t.end());
  return logistic_holdout_accuracy(x.topRows(h), t_train, x.bottomRows(x.rows() - h), t_test, cfg);
}

}  // namespace irmite
