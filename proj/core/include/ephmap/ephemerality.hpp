#pragma once

#include "ephmap/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ephmap {

// Saturation bounds. Beliefs never reach 0 or 1 so later sessions can still
// revise them.
inline constexpr double kEphMin = 0.01;
inline constexpr double kEphMax = 0.99;

inline double clamp_eph(double value) {
  if (!std::isfinite(value)) {
    throw Error("clamp_eph: non-finite value");
  }
  return std::min(std::max(value, kEphMin), kEphMax);
}

// Recursive Bayesian fusion of a prior belief with one evidence term, result
// clamped to the saturation bounds. Evidence 0.5 carries no information and
// leaves the prior untouched.
inline double bayes_fuse(double prior, double evidence) {
  if (evidence == 0.5) {
    return clamp_eph(prior);
  }
  const double num = evidence * prior;
  const double den = num + (1.0 - evidence) * (1.0 - prior);
  return clamp_eph(num / den);
}

}  // namespace ephmap
