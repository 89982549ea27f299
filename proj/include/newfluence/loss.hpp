#pragma once

#include "newfluence/common.hpp"

#include <cmath>

namespace newfluence {

enum class LossKind { squared, logistic };

struct LossEval {
  double value;
  double d1;  // derivative in the linear predictor u
  double d2;  // second derivative in u; nonnegative for both kinds
};

inline double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

struct LossModel {
  LossKind kind = LossKind::logistic;

  void check_response(double y) const {
    require(std::isfinite(y), "loss response must be finite");
    if (kind == LossKind::logistic && y != 0.0 && y != 1.0)
      throw std::domain_error("logistic loss expects responses in {0, 1}");
  }

  LossEval eval(double y, double u) const {
    check_response(y);
    require(std::isfinite(u), "loss linear predictor must be finite");
    if (kind == LossKind::squared) {
      const double r = u - y;
      return {0.5 * r * r, r, 1.0};
    }
    // log(1 + e^u) - y*u on the branch that never overflows; the curvature is
    // written as sigma(u)*sigma(-u) to keep precision when sigma saturates.
    const double value = (u > 0.0) ? (1.0 - y) * u + std::log1p(std::exp(-u))
                                   : std::log1p(std::exp(u)) - y * u;
    const double s = sigmoid(u);
    return {value, s - y, s * sigmoid(-u)};
  }
};

inline LossEval loss_eval(const LossModel& loss, double y, double u) { return loss.eval(y, u); }

}  // namespace newfluence
