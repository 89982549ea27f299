#pragma once

#include "newfluence/common.hpp"

#include <span>

namespace newfluence {

// Kendall rank correlation, tau-a convention: tied pairs contribute zero to
// the concordant-discordant balance and the denominator stays m(m-1)/2.
// Influence values are continuous so ties have measure zero in practice, but
// the convention matters for exactness tests.
inline double kendall_tau(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "kendall_tau needs sequences of equal length");
  require(a.size() >= 2, "kendall_tau needs at least two observations");
  const std::size_t m = a.size();
  long long balance = 0;
  for (std::size_t j = 1; j < m; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      const double da = a[j] - a[k];
      const double db = b[j] - b[k];
      const int sa = (da > 0.0) - (da < 0.0);
      const int sb = (db > 0.0) - (db < 0.0);
      balance += sa * sb;
    }
  }
  return static_cast<double>(balance) /
         (0.5 * static_cast<double>(m) * static_cast<double>(m - 1));
}

inline double kendall_tau(const Vector& a, const Vector& b) {
  return kendall_tau(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                     std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

}  // namespace newfluence
