#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace newfluence {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// The penalized Hessian (or a leave-one-out downdate of it) stopped being
// numerically positive definite.
struct SingularHessianError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A leverage value reached 1 within tolerance, so the 1/(1 - h) factor that
// the leave-one-out updates rely on is no longer meaningful.
struct DegenerateLeverageError : std::runtime_error {
  DegenerateLeverageError(Index index_, double leverage_)
      : std::runtime_error(index_ >= 0
                               ? "degenerate leverage at sample " + std::to_string(index_) +
                                     ": h = " + std::to_string(leverage_)
                               : "degenerate leverage: h = " + std::to_string(leverage_)),
        index(index_),
        leverage(leverage_) {}

  Index index;      // offending sample, or -1 when no sample is associated
  double leverage;  // the h value that triggered the error
};

// Command-line misuse; the message names the offending flag or subcommand.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw std::invalid_argument(what);
}

}  // namespace newfluence
