#pragma once

// Parameter initialization and the Adam update rule.

#include <cmath>
#include <cstdint>
#include <vector>

#include "eagcl/common.hpp"
#include "eagcl/tensor.hpp"

namespace eagcl {

// Xavier/Glorot uniform: entries in +-sqrt(6/(fan_in+fan_out)) with the fans
// taken from the 2-D shape.
inline Tensor xavier_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(rows, cols);
  Rng rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

struct AdamConfig {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (lr <= 0.0) throw ConfigError("adam: lr must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      throw ConfigError("adam: betas must be in [0,1)");
  }
};

struct AdamState {
  Tensor m, v;

  void ensure_shape(const Tensor& param) {
    if (!m.same_shape(param)) {
      m = Tensor(param.rows(), param.cols());
      v = Tensor(param.rows(), param.cols());
    }
  }
};

// One bias-corrected Adam step on a single tensor. `step` is 1-based.
inline void adam_step(Tensor& param, const Tensor& grad, AdamState& state, long step,
                      const AdamConfig& cfg) {
  cfg.validate();
  check_same_shape(param, grad, "adam_step");
  state.ensure_shape(param);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace eagcl
