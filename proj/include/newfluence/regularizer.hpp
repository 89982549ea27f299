#pragma once

#include "newfluence/common.hpp"

#include <cmath>
#include <functional>
#include <utility>

namespace newfluence {

// Coefficient convention for the ridge penalty: the full squared norm
// (per-coordinate curvature 2) or half of it (curvature 1). The two differ
// only by a factor of two absorbed into the penalty strength, but effective
// degrees of freedom depend on which one a reported lambda refers to.
enum class RidgeConvention { sq_norm, half_sq_norm };

struct RegEval {
  double value;
  Vector grad;
  Vector hess_diag;  // the Hessian is diagonal for separable penalties
};

// Separable penalty r(b) = sum_k r_k(b_k) whose per-coordinate curvature is
// bounded below by a strong-convexity constant nu > 0.
class RegularizerModel {
 public:
  using ScalarFn = std::function<double(double)>;

  static RegularizerModel ridge(RidgeConvention convention = RidgeConvention::sq_norm) {
    RegularizerModel m;
    m.ridge_coeff_ = (convention == RidgeConvention::sq_norm) ? 2.0 : 1.0;
    m.nu_ = m.ridge_coeff_;
    return m;
  }

  static RegularizerModel separable(ScalarFn value, ScalarFn d1, ScalarFn d2, double nu) {
    require(value && d1 && d2, "separable regularizer needs value, d1 and d2 callbacks");
    require(std::isfinite(nu) && nu > 0.0, "strong-convexity constant must be positive");
    RegularizerModel m;
    m.value_ = std::move(value);
    m.d1_ = std::move(d1);
    m.d2_ = std::move(d2);
    m.nu_ = nu;
    return m;
  }

  double strong_convexity() const { return nu_; }

  RegEval eval(const Vector& beta) const {
    require(beta.size() >= 1, "regularizer input must be non-empty");
    require(beta.allFinite(), "regularizer input must be finite");
    if (!value_) {
      const double c = ridge_coeff_;
      return {0.5 * c * beta.squaredNorm(), c * beta, Vector::Constant(beta.size(), c)};
    }
    RegEval out{0.0, Vector(beta.size()), Vector(beta.size())};
    for (Index k = 0; k < beta.size(); ++k) {
      out.value += value_(beta[k]);
      out.grad[k] = d1_(beta[k]);
      const double curvature = d2_(beta[k]);
      require(curvature >= nu_, "regularizer curvature fell below its strong-convexity constant");
      out.hess_diag[k] = curvature;
    }
    return out;
  }

 private:
  ScalarFn value_, d1_, d2_;  // unset for the ridge fast path
  double ridge_coeff_ = 2.0;
  double nu_ = 2.0;
};

inline RegEval reg_eval(const RegularizerModel& reg, const Vector& beta) { return reg.eval(beta); }

}  // namespace newfluence
