#pragma once

#include "newfluence/dataset.hpp"
#include "newfluence/loss.hpp"
#include "newfluence/regularizer.hpp"

#include <cmath>
#include <utility>

namespace newfluence {

// Penalized empirical risk  L(b) = sum_j loss(y_j, x_j' b) + lambda * r(b).
struct ObjectiveSpec {
  Dataset dataset;
  LossModel loss;
  RegularizerModel regularizer;
  double lambda;

  ObjectiveSpec(Dataset dataset_, LossModel loss_, RegularizerModel regularizer_, double lambda_)
      : dataset(std::move(dataset_)),
        loss(loss_),
        regularizer(std::move(regularizer_)),
        lambda(lambda_) {
    require(std::isfinite(lambda) && lambda >= 0.0,
            "penalty strength must be finite and non-negative");
    for (Index j = 0; j < dataset.n(); ++j) loss.check_response(dataset.responses[j]);
  }

  Index n() const { return dataset.n(); }
  Index p() const { return dataset.p(); }
};

struct ObjectiveEval {
  double value;
  Vector grad;
  Matrix hessian;
};

// One-pass evaluation exposing the per-sample loss derivatives from which the
// Hessian is assembled lazily; `skip` (when in range) removes one sample,
// which is how every leave-one-out objective is expressed.
struct ObjectiveParts {
  double value;
  Vector grad;
  Vector loss_d1;       // per-sample first derivatives, zero at a skipped index
  Vector loss_d2;       // per-sample curvatures, zero at a skipped index
  Vector reg_hess_diag; // lambda times this enters the Hessian diagonal
};

namespace detail {

inline void check_beta(const ObjectiveSpec& spec, const Vector& beta) {
  require(beta.size() == spec.p(), "coefficient length must match the feature count");
  require(beta.allFinite(), "coefficients must be finite");
}

inline void check_skip(const ObjectiveSpec& spec, Index skip) {
  require(skip < spec.n(), "skip index out of range");
}

}  // namespace detail

inline ObjectiveParts objective_parts(const ObjectiveSpec& spec, const Vector& beta,
                                      Index skip = -1) {
  detail::check_beta(spec, beta);
  detail::check_skip(spec, skip);
  const Index n = spec.n();
  const Vector u = spec.dataset.features * beta;
  ObjectiveParts out{0.0, Vector(), Vector(n), Vector(n), Vector()};
  for (Index j = 0; j < n; ++j) {
    if (j == skip) {
      out.loss_d1[j] = 0.0;
      out.loss_d2[j] = 0.0;
      continue;
    }
    const LossEval e = spec.loss.eval(spec.dataset.responses[j], u[j]);
    out.value += e.value;
    out.loss_d1[j] = e.d1;
    out.loss_d2[j] = e.d2;
  }
  RegEval reg = spec.regularizer.eval(beta);
  out.value += spec.lambda * reg.value;
  out.grad = spec.dataset.features.transpose() * out.loss_d1 + spec.lambda * reg.grad;
  out.reg_hess_diag = std::move(reg.hess_diag);
  return out;
}

// Value-only evaluation; cheaper inside line searches.
inline double objective_value(const ObjectiveSpec& spec, const Vector& beta, Index skip = -1) {
  detail::check_beta(spec, beta);
  detail::check_skip(spec, skip);
  const Vector u = spec.dataset.features * beta;
  double value = 0.0;
  for (Index j = 0; j < spec.n(); ++j) {
    if (j == skip) continue;
    value += spec.loss.eval(spec.dataset.responses[j], u[j]).value;
  }
  return value + spec.lambda * spec.regularizer.eval(beta).value;
}

// G = X' diag(loss_d2) X + lambda diag(reg_hess_diag), built by a symmetric
// rank update on the weighted design so only one triangle is computed.
inline Matrix assemble_hessian(const ObjectiveSpec& spec, const ObjectiveParts& parts) {
  const Index p = spec.p();
  Matrix weighted = spec.dataset.features.transpose() * parts.loss_d2.cwiseSqrt().asDiagonal();
  Matrix hessian = Matrix::Zero(p, p);
  hessian.selfadjointView<Eigen::Lower>().rankUpdate(weighted);
  hessian.triangularView<Eigen::StrictlyUpper>() = hessian.transpose();
  hessian.diagonal() += spec.lambda * parts.reg_hess_diag;
  return hessian;
}

inline ObjectiveEval objective_eval(const ObjectiveSpec& spec, const Vector& beta) {
  ObjectiveParts parts = objective_parts(spec, beta);
  Matrix hessian = assemble_hessian(spec, parts);
  return {parts.value, std::move(parts.grad), std::move(hessian)};
}

}  // namespace newfluence
