#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "evfusion/error.hpp"

namespace evfusion {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a flat parameter vector. A coordinate whose
// gradient has always been zero is never moved.
class Adam {
 public:
  Adam(std::size_t size, AdamOptions options) : options_(options), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
      throw InvalidArgument("Adam step size mismatch");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * grad[i];
      v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * grad[i] * grad[i];
      params[i] -= options_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + options_.eps);
    }
  }

  std::size_t steps() const noexcept { return t_; }

 private:
  AdamOptions options_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace evfusion
