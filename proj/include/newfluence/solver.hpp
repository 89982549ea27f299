#pragma once

#include "newfluence/objective.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>

namespace newfluence {

struct SolverConfig {
  // Gradient-norm target; unset picks 1e-10 * max(1, initial gradient norm),
  // tight enough that exact refits resolve effects far below the O(1/n)
  // differences being measured.
  std::optional<double> tol{};
  int max_iter = 100;
  bool damping = true;  // step-halving backtracking on the Newton direction
  // Observer invoked after the initial evaluation and after every accepted
  // iterate; useful for descent diagnostics.
  std::function<void(int iteration, double value, double grad_norm)> on_iterate{};

  void validate() const {
    if (tol) require(std::isfinite(*tol) && *tol > 0.0, "tol must be positive");
    require(max_iter >= 1, "max_iter must be at least 1");
  }
};

struct FitResult {
  Vector beta;
  double objective_value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

constexpr int kMaxHalvings = 30;

// Damped Newton on the objective restricted to samples != skip (skip < 0 keeps
// all). The plain Newton step is tried first and accepted on strict objective
// decrease; otherwise the step is halved up to kMaxHalvings times. When no
// candidate shows a representable decrease (the objective sits at its
// floating-point floor) a plain step that at least halves the gradient norm is
// still taken, since near the optimum the quadratic model is accurate and the
// objective comparison is pure rounding noise.
inline FitResult newton_minimize(const ObjectiveSpec& spec, const Vector& init,
                                 const SolverConfig& config, Index skip) {
  config.validate();
  require(spec.lambda > 0.0, "newton solve needs a positive penalty strength");

  Vector beta = init;
  ObjectiveParts cur = objective_parts(spec, beta, skip);
  double grad_norm = cur.grad.norm();
  const double tol = config.tol ? *config.tol : 1e-10 * std::max(1.0, grad_norm);
  if (config.on_iterate) config.on_iterate(0, cur.value, grad_norm);

  int iterations = 0;
  while (grad_norm > tol && iterations < config.max_iter) {
    Matrix hessian = assemble_hessian(spec, cur);
    Eigen::LLT<Matrix> llt(hessian);
    if (llt.info() != Eigen::Success)
      throw SingularHessianError("newton step: penalized Hessian is not positive definite");
    const Vector direction = llt.solve(cur.grad);

    bool accepted = false;
    if (!config.damping) {
      beta -= direction;
      cur = objective_parts(spec, beta, skip);
      accepted = true;
    } else {
      Vector candidate = beta - direction;
      ObjectiveParts plain = objective_parts(spec, candidate, skip);
      if (plain.value < cur.value || plain.grad.norm() < 0.5 * grad_norm) {
        beta = std::move(candidate);
        cur = std::move(plain);
        accepted = true;
      } else {
        double step = 0.5;
        for (int k = 0; k < kMaxHalvings; ++k, step *= 0.5) {
          candidate = beta - step * direction;
          if (objective_value(spec, candidate, skip) < cur.value) {
            beta = std::move(candidate);
            cur = objective_parts(spec, beta, skip);
            accepted = true;
            break;
          }
        }
      }
    }
    if (!accepted) break;  // no representable progress left at this precision
    grad_norm = cur.grad.norm();
    ++iterations;
    if (config.on_iterate) config.on_iterate(iterations, cur.value, grad_norm);
  }

  FitResult out;
  out.beta = std::move(beta);
  out.objective_value = cur.value;
  out.grad_norm = grad_norm;
  out.iterations = iterations;
  out.converged = grad_norm <= tol;
  return out;
}

}  // namespace detail

inline FitResult newton_fit(const ObjectiveSpec& spec, const Vector& init,
                            const SolverConfig& config = {}) {
  detail::check_beta(spec, init);
  return detail::newton_minimize(spec, init, config, -1);
}

// Fit from the all-zero start, the default for experiment runs.
inline FitResult newton_fit(const ObjectiveSpec& spec, const SolverConfig& config = {}) {
  return newton_fit(spec, Vector::Zero(spec.p()), config);
}

// Exact minimizer of the objective with sample `leave_out` removed. Warm
// starting at the full-data solution is the intended use: the problem is
// convex with a unique minimizer, so the start affects cost, not the answer.
inline FitResult loo_refit(const ObjectiveSpec& spec, Index leave_out, const Vector& warm_start,
                           const SolverConfig& config = {}) {
  require(leave_out >= 0 && leave_out < spec.n(), "leave_out index out of range");
  detail::check_beta(spec, warm_start);
  return detail::newton_minimize(spec, warm_start, config, leave_out);
}

}  // namespace newfluence
