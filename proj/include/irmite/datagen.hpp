#pragma once

// Synthetic observational data: treatment first, then features conditional on
// treatment (a shared Gaussian, or a two-component Gaussian mixture), then both
// potential outcomes from group-dependent linear or quadratic means.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "irmite/error.hpp"
#include "irmite/numerics.hpp"

namespace irmite {

enum class FeatureModel { ModelA, ModelB };
enum class OutcomeModel { Linear, Quadratic };

inline std::string to_string(FeatureModel m) { return m == FeatureModel::ModelA ? "A" : "B"; }
inline std::string to_string(OutcomeModel m) {
  return m == OutcomeModel::Linear ? "linear" : "quadratic";
}

struct GenSpec {
  std::size_t d = 1;
  FeatureModel feature_model = FeatureModel::ModelA;
  OutcomeModel outcome_model = OutcomeModel::Linear;
  Vector mu0;
  Vector mu1;
  double sigma_noise = 1.0;
  double coeff_lo = 0.0;
  double coeff_hi = 1.0;
  double treatment_p = 0.5;

  /// mu0 = -scale * 1, mu1 = +scale * 1.
  static GenSpec symmetric(std::size_t d, FeatureModel fm, OutcomeModel om, double scale) {
    GenSpec s;
    s.d = d;
    s.feature_model = fm;
    s.outcome_model = om;
    s.mu0 = Vector::Constant(static_cast<Eigen::Index>(d), -scale);
    s.mu1 = Vector::Constant(static_cast<Eigen::Index>(d), scale);
    return s;
  }

  const Vector& mean(int t) const { return t == 1 ? mu1 : mu0; }

  void validate() const {
    require(d >= 1, ErrorCode::InvalidArg, "GenSpec.d must be >= 1");
    const auto di = static_cast<Eigen::Index>(d);
    require(mu0.size() == di && mu1.size() == di, ErrorCode::DimensionMismatch,
            "GenSpec means must have length d");
    require(sigma_noise >= 0.0, ErrorCode::InvalidArg, "GenSpec.sigma_noise must be >= 0");
    require(coeff_lo < coeff_hi, ErrorCode::InvalidArg, "GenSpec needs coeff_lo < coeff_hi");
    require(treatment_p > 0.0 && treatment_p < 1.0, ErrorCode::InvalidArg,
            "GenSpec.treatment_p must lie strictly inside (0, 1)");
  }
};

/// Covariances for both feature models, together with the eigen-factors they
/// were assembled from (sigma = Q diag(lambda) Q^T).
struct CovarianceSet {
  Matrix sigma_A;
  Matrix sigma_0;
  Matrix sigma_1;
  Matrix q_A;
  Matrix q_B;
  Vector lambda_A;
  Vector lambda_0;
  Vector lambda_1;

  Eigen::Index dim() const { return sigma_A.rows(); }
};

/// Quadratic terms are empty (0 x 0) for linear outcomes.
struct OutcomeParams {
  Matrix A0, A1;
  Vector b0, b1;
  double c0 = 0.0;
  double c1 = 0.0;

  bool quadratic() const { return A0.size() > 0; }

  double mean(int t, const Eigen::Ref<const Vector>& x) const {
    const Vector& b = t == 1 ? b1 : b0;
    double m = x.dot(b) + (t == 1 ? c1 : c0);
    if (quadratic()) m += x.dot((t == 1 ? A1 : A0) * x);
    return m;
  }
};

struct PotentialOutcomes {
  Vector y0;
  Vector y1;
  Vector ite;
};

struct Dataset {
  Matrix x;
  std::vector<int> t;
  Vector y_f;
  std::optional<PotentialOutcomes> oracle;

  std::size_t size() const { return t.size(); }
  Eigen::Index dim() const { return x.cols(); }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(t.size());
    require(x.rows() == n && y_f.size() == n, ErrorCode::DimensionMismatch, "Dataset shapes disagree");
    for (int ti : t) require(ti == 0 || ti == 1, ErrorCode::InvalidArg, "treatment must be 0 or 1");
    if (oracle)
      require(oracle->y0.size() == n && oracle->y1.size() == n && oracle->ite.size() == n,
              ErrorCode::DimensionMismatch, "Dataset oracle columns have the wrong length");
  }

  /// Rows in the given order; oracle columns follow when present.
  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    const auto m = static_cast<Eigen::Index>(rows.size());
    out.x.resize(m, x.cols());
    out.y_f.resize(m);
    out.t.reserve(rows.size());
    if (oracle) out.oracle = PotentialOutcomes{Vector(m), Vector(m), Vector(m)};
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto i = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(k)]);
      out.x.row(k) = x.row(i);
      out.t.push_back(t[static_cast<std::size_t>(i)]);
      out.y_f(k) = y_f(i);
      if (oracle) {
        out.oracle->y0(k) = oracle->y0(i);
        out.oracle->y1(k) = oracle->y1(i);
        out.oracle->ite(k) = oracle->ite(i);
      }
    }
    return out;
  }

  std::size_t count_treated() const {
    return static_cast<std::size_t>(std::count(t.begin(), t.end(), 1));
  }
};

namespace detail {

inline Vector normalized_eigenvalues(Rng& rng, std::size_t d, bool ascending) {
  Vector lam = sample_uniform(rng, 0.0, 1.0, d);
  lam /= lam.sum();
  if (ascending)
    std::sort(lam.begin(), lam.end());
  else
    std::sort(lam.begin(), lam.end(), std::greater<>());
  return lam;
}

inline Matrix eigen_assemble(const Matrix& q, const Vector& lambda) {
  Matrix s = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

}  // namespace detail

/// Eigenvalues are drawn uniform on [0, 1] independently for each of the
/// three matrices and rescaled to sum to one; lambda_A and lambda_0 ascend,
/// lambda_1 descends. Model A uses basis q_A, both model-B matrices share q_B.
inline CovarianceSet build_covariances(Rng& rng, std::size_t d) {
  require(d >= 1, ErrorCode::InvalidArg, "build_covariances needs d >= 1");
  CovarianceSet cov;
  cov.lambda_A = detail::normalized_eigenvalues(rng, d, true);
  cov.lambda_0 = detail::normalized_eigenvalues(rng, d, true);
  cov.lambda_1 = detail::normalized_eigenvalues(rng, d, false);
  const auto di = static_cast<Eigen::Index>(d);
  cov.q_A = random_orthonormal(rng, di);
  cov.q_B = random_orthonormal(rng, di);
  cov.sigma_A = detail::eigen_assemble(cov.q_A, cov.lambda_A);
  cov.sigma_0 = detail::eigen_assemble(cov.q_B, cov.lambda_0);
  cov.sigma_1 = detail::eigen_assemble(cov.q_B, cov.lambda_1);
  return cov;
}

/// Covariance set where every matrix is the given sigma (eigen-factors left
/// empty). Handy for probes with a hand-picked covariance.
inline CovarianceSet fixed_covariances(const Matrix& sigma) {
  CovarianceSet cov;
  cov.sigma_A = sigma;
  cov.sigma_0 = sigma;
  cov.sigma_1 = sigma;
  return cov;
}

inline std::vector<int> gen_treatment(Rng& rng, std::size_t n, double p) {
  return sample_bernoulli(rng, p, n);
}

inline Matrix gen_features(Rng& rng, const GenSpec& spec, const CovarianceSet& cov,
                           const std::vector<int>& t) {
  const auto d = static_cast<Eigen::Index>(spec.d);
  require(cov.sigma_A.rows() == d && cov.sigma_0.rows() == d && cov.sigma_1.rows() == d,
          ErrorCode::DimensionMismatch, "covariance dimension does not match spec.d");
  require(spec.mu0.size() == d && spec.mu1.size() == d, ErrorCode::DimensionMismatch,
          "mean dimension does not match spec.d");

  const auto n = static_cast<Eigen::Index>(t.size());
  Matrix x(n, d);
  if (spec.feature_model == FeatureModel::ModelA) {
    const Matrix l = cholesky(cov.sigma_A);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector z = sample_normal(rng, spec.d);
      x.row(i) = (spec.mean(t[static_cast<std::size_t>(i)]) + l * z).transpose();
    }
  } else {
    const Matrix l0 = cholesky(cov.sigma_0);
    const Matrix l1 = cholesky(cov.sigma_1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool second = rng.bernoulli(0.5);
      const Vector z = sample_normal(rng, spec.d);
      x.row(i) = (spec.mean(t[static_cast<std::size_t>(i)]) + (second ? l1 : l0) * z).transpose();
    }
  }
  return x;
}

inline OutcomeParams gen_outcome_params(Rng& rng, const GenSpec& spec) {
  OutcomeParams p;
  const double lo = spec.coeff_lo;
  const double hi = spec.coeff_hi;
  p.c0 = rng.uniform(lo, hi);
  p.c1 = rng.uniform(lo, hi);
  p.b0 = sample_uniform(rng, lo, hi, spec.d);
  p.b1 = sample_uniform(rng, lo, hi, spec.d);
  if (spec.outcome_model == OutcomeModel::Quadratic) {
    const auto d = static_cast<Eigen::Index>(spec.d);
    p.A0.resize(d, d);
    p.A1.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) p.A0(i, j) = rng.uniform(lo, hi);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) p.A1(i, j) = rng.uniform(lo, hi);
  }
  return p;
}

struct Outcomes {
  Vector y0;
  Vector y1;
  Vector y_f;
  Vector ite;
};

/// Both potential outcomes get independent noise; y_f selects by t.
inline Outcomes gen_outcomes(Rng& rng, const GenSpec& spec, const OutcomeParams& params,
                             const Matrix& x, const std::vector<int>& t) {
  const auto n = static_cast<Eigen::Index>(t.size());
  require(x.rows() == n, ErrorCode::DimensionMismatch, "x rows must match treatment length");
  require(x.cols() == params.b0.size() && x.cols() == params.b1.size(), ErrorCode::DimensionMismatch,
          "x columns must match coefficient length");
  if (params.quadratic())
    require(params.A0.rows() == x.cols() && params.A1.rows() == x.cols(), ErrorCode::DimensionMismatch,
            "quadratic coefficient shape mismatch");

  Outcomes out{Vector(n), Vector(n), Vector(n), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector xi = x.row(i).transpose();
    const double e0 = rng.normal();
    const double e1 = rng.normal();
    out.y0(i) = params.mean(0, xi) + spec.sigma_noise * e0;
    out.y1(i) = params.mean(1, xi) + spec.sigma_noise * e1;
    out.ite(i) = out.y1(i) - out.y0(i);
    out.y_f(i) = t[static_cast<std::size_t>(i)] == 1 ? out.y1(i) : out.y0(i);
  }
  return out;
}

struct GeneratedData {
  Dataset train;
  Dataset test;
  OutcomeParams params;
  CovarianceSet cov;
};

/// Smallest acceptable treatment-group size in a training set of dimension d.
inline std::size_t min_group_size(std::size_t d) { return d / 2 + 2; }

namespace detail {

inline Dataset draw_dataset(const Rng& root, std::string_view part, const GenSpec& spec,
                            const CovarianceSet& cov, const OutcomeParams& params, std::size_t n,
                            bool guard_groups) {
  const std::string prefix(part);
  Dataset ds;
  constexpr int kMaxRetries = 100;
  for (int attempt = 0;; ++attempt) {
    Rng rng = root.split(prefix + "/treatment", static_cast<std::uint64_t>(attempt));
    ds.t = gen_treatment(rng, n, spec.treatment_p);
    if (!guard_groups) break;
    const std::size_t treated = ds.count_treated();
    const std::size_t floor = min_group_size(spec.d);
    if (treated >= floor && n - treated >= floor) break;
    if (attempt == kMaxRetries)
      throw Error(ErrorCode::InvalidArg, "could not draw treatment groups with at least " +
                                             std::to_string(floor) + " members each");
  }
  Rng feature_rng = root.split(prefix + "/features");
  ds.x = gen_features(feature_rng, spec, cov, ds.t);
  Rng outcome_rng = root.split(prefix + "/outcomes");
  Outcomes o = gen_outcomes(outcome_rng, spec, params, ds.x, ds.t);
  ds.y_f = std::move(o.y_f);
  ds.oracle = PotentialOutcomes{std::move(o.y0), std::move(o.y1), std::move(o.ite)};
  return ds;
}

}  // namespace detail

/// One covariance set and one parameter draw shared by train and test. The
/// training treatment vector is redrawn until both groups reach
/// min_group_size(d).
inline GeneratedData generate(const Rng& root, const GenSpec& spec, std::size_t n_tr, std::size_t n_te) {
  spec.validate();
  require(n_tr >= 1 && n_te >= 1, ErrorCode::InvalidArg, "generate needs n_tr, n_te >= 1");
  GeneratedData g;
  Rng cov_rng = root.split("covariance");
  g.cov = build_covariances(cov_rng, spec.d);
  Rng param_rng = root.split("params");
  g.params = gen_outcome_params(param_rng, spec);
  g.train = detail::draw_dataset(root, "train", spec, g.cov, g.params, n_tr, true);
  g.test = detail::draw_dataset(root, "test", spec, g.cov, g.params, n_te, false);
  return g;
}

inline GeneratedData generate(std::uint64_t root_seed, const GenSpec& spec, std::size_t n_tr,
                              std::size_t n_te) {
  return generate(Rng(root_seed), spec, n_tr, n_te);
}

}  // namespace irmite
