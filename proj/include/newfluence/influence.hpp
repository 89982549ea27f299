#pragma once

#include "newfluence/solver.hpp"

#include <cmath>
#include <optional>
#include <utility>

namespace newfluence {

struct TestPoint {
  double y;
  Vector x;
};

// Everything the influence measures reuse from one converged fit: the
// estimate, per-sample loss derivatives, one Cholesky factorization of the
// penalized Hessian G, and the solved columns G^{-1} x_i (one per training
// point, shared by the leverage diagonal, the classical influence function
// and the one-step leave-one-out update). The spec object must outlive this.
class FittedModel {
 public:
  FittedModel(const ObjectiveSpec& spec, Vector beta_hat)
      : spec_(&spec), beta_hat_(std::move(beta_hat)) {
    detail::check_beta(spec, beta_hat_);
    ObjectiveParts parts = objective_parts(spec, beta_hat_);
    llt_.compute(assemble_hessian(spec, parts));
    loss_d1_ = std::move(parts.loss_d1);
    loss_d2_ = std::move(parts.loss_d2);
    if (llt_.info() != Eigen::Success)
      throw SingularHessianError("fitted model: penalized Hessian is not positive definite");
    g_inv_xt_ = llt_.solve(spec.dataset.features.transpose());
  }

  FittedModel(const ObjectiveSpec& spec, const FitResult& fit) : FittedModel(spec, fit.beta) {}

  const ObjectiveSpec& spec() const { return *spec_; }
  const Vector& beta_hat() const { return beta_hat_; }
  const Eigen::LLT<Matrix>& g_factorization() const { return llt_; }
  const Vector& loss_d1() const { return loss_d1_; }
  const Vector& loss_d2() const { return loss_d2_; }
  // Column i is G^{-1} x_i.
  const Matrix& g_inv_features_t() const { return g_inv_xt_; }

  double leverage(Index i) const {
    require(i >= 0 && i < spec_->n(), "train index out of range");
    return loss_d2_[i] * spec_->dataset.features.row(i).dot(g_inv_xt_.col(i));
  }

 private:
  const ObjectiveSpec* spec_;
  Vector beta_hat_;
  Eigen::LLT<Matrix> llt_;
  Vector loss_d1_, loss_d2_;
  Matrix g_inv_xt_;
};

struct HatDiagnostics {
  Vector h;         // h_i = (x_i' G^{-1} x_i) * loss_d2_i
  double df;        // sum of the leverage values
  double df_ratio;  // df / p
};

// Leverage values reaching 1 (within this slack) make the 1/(1 - h) updates
// meaningless; treated as a hard error rather than clamped.
inline constexpr double kLeverageSlack = 1e-12;

inline HatDiagnostics hat_diagonal(const FittedModel& model) {
  const Index n = model.spec().n();
  HatDiagnostics out;
  out.h = model.spec()
              .dataset.features.cwiseProduct(model.g_inv_features_t().transpose())
              .rowwise()
              .sum()
              .cwiseProduct(model.loss_d2());
  for (Index i = 0; i < n; ++i) {
    if (out.h[i] >= 1.0 - kLeverageSlack) throw DegenerateLeverageError(i, out.h[i]);
  }
  out.df = out.h.sum();
  out.df_ratio = out.df / static_cast<double>(model.spec().p());
  return out;
}

inline void check_test_point(const ObjectiveSpec& spec, const TestPoint& z0) {
  require(z0.x.size() == spec.p(), "test point dimension must match the feature count");
  require(z0.x.allFinite(), "test point features must be finite");
  spec.loss.check_response(z0.y);
}

// Classical influence function: d_loss0(beta_hat) * x0' G^{-1} x_i * d_loss_i.
inline double classical_if(const FittedModel& model, Index i, const TestPoint& z0) {
  require(i >= 0 && i < model.spec().n(), "train index out of range");
  check_test_point(model.spec(), z0);
  const double d0 = model.spec().loss.eval(z0.y, z0.x.dot(model.beta_hat())).d1;
  return d0 * z0.x.dot(model.g_inv_features_t().col(i)) * model.loss_d1()[i];
}

// Leverage-corrected influence function.
inline double corrected_if(double i_if, double h_ii) {
  require(std::isfinite(i_if) && std::isfinite(h_ii), "corrected_if inputs must be finite");
  require(h_ii >= 0.0, "leverage must be non-negative");
  if (h_ii >= 1.0) throw DegenerateLeverageError(-1, h_ii);
  return i_if / (1.0 - h_ii);
}

// Action of (G - d * x x')^{-1} assembled from a factorization of G by the
// Woodbury rank-one identity. Holds a reference to the factorization; the
// caller keeps it alive.
class LooHessianInverse {
 public:
  LooHessianInverse(const Eigen::LLT<Matrix>& llt, Vector g_inv_x, double coeff)
      : llt_(&llt), g_inv_x_(std::move(g_inv_x)), coeff_(coeff) {}

  Vector apply(const Vector& v) const {
    require(v.size() == g_inv_x_.size(), "vector length must match the operator dimension");
    return llt_->solve(v) + coeff_ * g_inv_x_ * g_inv_x_.dot(v);
  }

 private:
  const Eigen::LLT<Matrix>* llt_;
  Vector g_inv_x_;  // G^{-1} x
  double coeff_;    // d / (1 - d * x' G^{-1} x)
};

inline LooHessianInverse woodbury_downdate(const Eigen::LLT<Matrix>& g_factorization,
                                           const Vector& x, double d) {
  require(std::isfinite(d) && d >= 0.0, "downdate weight must be finite and non-negative");
  require(x.allFinite(), "downdate direction must be finite");
  require(x.size() == g_factorization.matrixLLT().rows(),
          "downdate direction must match the factorization dimension");
  Vector g_inv_x = g_factorization.solve(x);
  const double denominator = 1.0 - d * x.dot(g_inv_x);
  if (denominator <= kLeverageSlack) throw DegenerateLeverageError(-1, 1.0 - denominator);
  return LooHessianInverse(g_factorization, std::move(g_inv_x), d / denominator);
}

// One Newton step on the leave-one-out objective from beta_hat, simplified by
// the Woodbury identity so only the full-data factorization is touched:
// beta + d_loss_i * G^{-1} x_i / (1 - h_i).
inline Vector newton_loo_beta(const FittedModel& model, Index i) {
  const double h = model.leverage(i);
  const double denominator = 1.0 - h;
  if (denominator <= kLeverageSlack) throw DegenerateLeverageError(i, h);
  return model.beta_hat() + (model.loss_d1()[i] / denominator) * model.g_inv_features_t().col(i);
}

// Change in the test loss under the one-step leave-one-out coefficients.
inline double newfluence(const FittedModel& model, Index i, const TestPoint& z0) {
  check_test_point(model.spec(), z0);
  const Vector beta_loo = newton_loo_beta(model, i);
  const LossModel& loss = model.spec().loss;
  return loss.eval(z0.y, z0.x.dot(beta_loo)).value -
         loss.eval(z0.y, z0.x.dot(model.beta_hat())).value;
}

// Change in the test loss under an exact leave-one-out refit. One refit per
// training point; callers evaluating many test points against the same i
// should refit once via loo_refit and difference the losses directly.
inline double true_influence(const ObjectiveSpec& spec, const FitResult& fit, Index i,
                             const TestPoint& z0, const SolverConfig& config = {}) {
  require(fit.converged, "true influence needs a converged full-data fit");
  check_test_point(spec, z0);
  const FitResult refit = loo_refit(spec, i, fit.beta, config);
  if (!refit.converged)
    throw std::runtime_error("leave-one-out refit did not converge; loosen tol or raise max_iter");
  return spec.loss.eval(z0.y, z0.x.dot(refit.beta)).value -
         spec.loss.eval(z0.y, z0.x.dot(fit.beta)).value;
}

// One row of the per-(training point, test point) comparison output.
struct InfluenceRecord {
  Index train_index = 0;
  Index test_index = 0;
  double h_ii = 0.0;
  std::optional<double> i_true;  // absent when exact refits were not requested
  double i_if = 0.0;
  double i_if_corrected = 0.0;
  double i_new = 0.0;
};

}  // namespace newfluence
