#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "errors.hpp"

namespace epicount {

using Count = std::uint64_t;

inline Count checked_mul(Count a, Count b, const char* what = "integer product") {
  Count out = 0;
  if (__builtin_mul_overflow(a, b, &out))
    throw CapacityError(std::string(what) + " overflows 64 bits",
                        std::numeric_limits<Count>::max());
  return out;
}

inline Count checked_add(Count a, Count b, const char* what = "integer sum") {
  Count out = 0;
  if (__builtin_add_overflow(a, b, &out))
    throw CapacityError(std::string(what) + " overflows 64 bits",
                        std::numeric_limits<Count>::max());
  return out;
}

inline Count checked_pow(Count base, unsigned exp, const char* what = "integer power") {
  Count out = 1;
  for (unsigned i = 0; i < exp; ++i) out = checked_mul(out, base, what);
  return out;
}

/// Relative equality used for moment comparisons; exact zeros compare equal.
inline bool rel_equal(double a, double b, double rel_tol = 1e-12) {
  if (a == b) return true;
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= rel_tol * scale;
}

/// Gaussian binomial coefficient [n choose k]_q as a real number.
inline double gaussian_binomial(unsigned n, unsigned k, double q) {
  if (k > n) return 0.0;
  double out = 1.0;
  for (unsigned i = 0; i < k; ++i)
    out *= (std::pow(q, n - i) - 1.0) / (std::pow(q, i + 1) - 1.0);
  return out < 9007199254740992.0 ? std::round(out) : out;
}

inline double binomial(unsigned n, unsigned k) {
  if (k > n) return 0.0;
  double out = 1.0;
  for (unsigned i = 0; i < k; ++i) out = out * (n - i) / (i + 1);
  return std::round(out);
}

}  // namespace epicount
