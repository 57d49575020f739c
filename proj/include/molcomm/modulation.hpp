#pragma once

#include <cmath>
#include <stdexcept>

#include "molcomm/types.hpp"

namespace molcomm {

/// Binary release-rate mapping. s0 always releases nothing; s1 releases x1[n] in
/// slot n of the symbol interval. Power is the Euclidean-norm budget on x1.
struct Modulation {
  VectorXd x1;
  double power = 100.0;

  int samples() const { return static_cast<int>(x1.size()); }
  VectorXd x0() const { return VectorXd::Zero(x1.size()); }

  void validate() const {
    if (x1.size() < 1) throw std::invalid_argument("modulation: x1 must have at least one slot");
    if ((x1.array() < 0.0).any()) throw std::invalid_argument("modulation: release rates must be non-negative");
    if (!x1.allFinite()) throw std::invalid_argument("modulation: release rates must be finite");
    if (!(power > 0.0)) throw std::invalid_argument("modulation: power budget must be positive");
    if (x1.norm() > power * (1.0 + 1e-6))
      throw std::invalid_argument("modulation: ||x1||_2 exceeds the power budget");
  }

  /// Single release of `amount` at the first slot of an N-slot interval.
  static Modulation single_release(double amount, int samples, double power) {
    Modulation m;
    m.x1 = VectorXd::Zero(samples);
    m.x1(0) = amount;
    m.power = power;
    return m;
  }
};

}  // namespace molcomm
