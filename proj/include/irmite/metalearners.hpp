#pragma once

// T-learner (one regression per treatment arm) and S-learner (one regression
// on [x, t, x*t]) built on either base-learner.

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "irmite/datagen.hpp"
#include "irmite/domains.hpp"
#include "irmite/error.hpp"
#include "irmite/learners.hpp"

namespace irmite {

enum class MetaKind { TLearner, SLearner };
enum class BaseLearner { IRM, OLS };

struct IteEstimator {
  MetaKind kind = MetaKind::TLearner;
  BaseLearner base = BaseLearner::OLS;
  std::size_t n_e = 1;
  std::optional<LinearModel> control_model;
  std::optional<LinearModel> treatment_model;
  std::optional<LinearModel> single_model;

  void validate() const {
    if (kind == MetaKind::TLearner)
      require(control_model && treatment_model && !single_model, ErrorCode::InvalidArg,
              "a T-learner holds exactly a control and a treatment model");
    else
      require(single_model && !control_model && !treatment_model, ErrorCode::InvalidArg,
              "an S-learner holds exactly one model");
    require(base != BaseLearner::OLS || n_e == 1, ErrorCode::InvalidArg, "OLS estimators use a single domain");
  }

  std::string name() const {
    if (base == BaseLearner::IRM) return kind == MetaKind::TLearner ? "IRM2" : "IRM1";
    return kind == MetaKind::TLearner ? "OLS_LR2" : "OLS_LR1";
  }
};

/// [x, t, x * t] with the interaction taken elementwise.
inline Matrix expand_interaction(const Matrix& x, const Eigen::Ref<const Vector>& t) {
  require(x.rows() == t.size(), ErrorCode::DimensionMismatch, "expand_interaction: row mismatch");
  const Eigen::Index d = x.cols();
  Matrix out(x.rows(), 2 * d + 1);
  out.leftCols(d) = x;
  out.col(d) = t;
  out.rightCols(d) = x.array().colwise() * t.array();
  return out;
}

inline Matrix expand_interaction(const Matrix& x, const std::vector<int>& t) {
  Vector tv(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) tv(static_cast<Eigen::Index>(i)) = t[i];
  return expand_interaction(x, tv);
}

/// Only the treatment column of the expanded design is left unstandardized.
inline std::vector<bool> s_learner_raw_columns(Eigen::Index d) {
  std::vector<bool> raw(static_cast<std::size_t>(2 * d + 1), false);
  raw[static_cast<std::size_t>(d)] = true;
  return raw;
}

namespace detail {

inline LinearModel fit_base(BaseLearner base, const std::vector<DomainData>& domains, const Matrix& pooled_x,
                            const Vector& pooled_y, const IrmConfig& cfg, double ols_ridge,
                            const std::vector<bool>& raw) {
  if (base == BaseLearner::OLS) return ols_fit(pooled_x, pooled_y, ols_ridge, raw);
  return irm_fit(domains, cfg, IrmFitOptions{raw, nullptr});
}

inline std::vector<DomainData> to_domain_data(const std::vector<Dataset>& parts) {
  std::vector<DomainData> out;
  out.reserve(parts.size());
  for (const auto& part : parts) out.push_back({part.x, part.y_f});
  return out;
}

inline LinearModel fit_branch(const Dataset& train, const DomainAssignment& assign, Group group,
                              BaseLearner base, const IrmConfig& cfg, double ols_ridge) {
  if (base == BaseLearner::OLS) {
    const auto pooled = partition(train, DomainAssignment::single(train.size()), group).front();
    return ols_fit(pooled.x, pooled.y_f, ols_ridge);
  }
  return irm_fit(to_domain_data(partition(train, assign, group)), cfg);
}

}  // namespace detail

/// Control branch sees only t = 0 rows, treatment branch only t = 1 rows, each
/// split by domain. OLS ignores the assignment.
inline IteEstimator fit_t_learner(const Dataset& train, const DomainAssignment& assign, BaseLearner base,
                                  const IrmConfig& cfg, double ols_ridge = 1e-8) {
  train.validate();
  IteEstimator est;
  est.kind = MetaKind::TLearner;
  est.base = base;
  est.n_e = base == BaseLearner::OLS ? 1 : assign.n_e;
  est.control_model = detail::fit_branch(train, assign, Group::Control, base, cfg, ols_ridge);
  est.treatment_model = detail::fit_branch(train, assign, Group::Treatment, base, cfg, ols_ridge);
  return est;
}

/// Single model on the expanded rows [x, t, x * t]; requires both arms in
/// every domain (EmptyDomainGroup otherwise).
inline IteEstimator fit_s_learner(const Dataset& train, const DomainAssignment& assign, BaseLearner base,
                                  const IrmConfig& cfg, double ols_ridge = 1e-8) {
  train.validate();
  const DomainAssignment effective = base == BaseLearner::OLS ? DomainAssignment::single(train.size()) : assign;
  // Both arms must be present in every domain or the t columns carry nothing.
  partition(train, effective, Group::Control);
  partition(train, effective, Group::Treatment);

  const auto raw = s_learner_raw_columns(train.dim());
  std::vector<DomainData> domains;
  for (const auto& part : partition(train, effective, Group::Both))
    domains.push_back({expand_interaction(part.x, part.t), part.y_f});

  IteEstimator est;
  est.kind = MetaKind::SLearner;
  est.base = base;
  est.n_e = effective.n_e;
  est.single_model = detail::fit_base(base, domains, expand_interaction(train.x, train.t), train.y_f, cfg,
                                      ols_ridge, raw);
  return est;
}

inline Vector predict_ite(const IteEstimator& est, const Matrix& x) {
  est.validate();
  if (est.kind == MetaKind::TLearner) {
    require(x.cols() == est.control_model->dim(), ErrorCode::DimensionMismatch,
            "predict_ite: feature dimension differs from training");
    return est.treatment_model->predict(x) - est.control_model->predict(x);
  }
  require(2 * x.cols() + 1 == est.single_model->dim(), ErrorCode::DimensionMismatch,
          "predict_ite: feature dimension differs from training");
  const Eigen::Index n = x.rows();
  return est.single_model->predict(expand_interaction(x, Vector::Ones(n))) -
         est.single_model->predict(expand_interaction(x, Vector::Zero(n)));
}

inline std::string to_string(MetaKind k) { return k == MetaKind::TLearner ? "t_learner" : "s_learner"; }
inline std::string to_string(BaseLearner b) { return b == BaseLearner::IRM ? "irm" : "ols"; }

inline void to_json(nlohmann::json& j, const IteEstimator& est) {
  est.validate();
  j = nlohmann::json{{"kind", to_string(est.kind)}, {"base", to_string(est.base)}, {"n_e", est.n_e}};
  if (est.kind == MetaKind::TLearner) {
    j["control_model"] = *est.control_model;
    j["treatment_model"] = *est.treatment_model;
  } else {
    j["single_model"] = *est.single_model;
  }
}

inline void from_json(const nlohmann::json& j, IteEstimator& est) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    const auto base = j.at("base").get<std::string>();
    require(kind == "t_learner" || kind == "s_learner", ErrorCode::SchemaError, "unknown estimator kind " + kind);
    require(base == "irm" || base == "ols", ErrorCode::SchemaError, "unknown base learner " + base);
    est.kind = kind == "t_learner" ? MetaKind::TLearner : MetaKind::SLearner;
    est.base = base == "irm" ? BaseLearner::IRM : BaseLearner::OLS;
    est.n_e = j.at("n_e").get<std::size_t>();
    est.control_model.reset();
    est.treatment_model.reset();
    est.single_model.reset();
    if (est.kind == MetaKind::TLearner) {
      est.control_model = j.at("control_model").get<LinearModel>();
      est.treatment_model = j.at("treatment_model").get<LinearModel>();
    } else {
      est.single_model = j.at("single_model").get<LinearModel>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("estimator JSON: ") + e.what());
  }
  est.validate();
}

}  // namespace irmite
