#pragma once

#include <map>
#include <string>

#include "rsub/numerics/tape.hpp"
#include "rsub/numerics/tensor.hpp"

namespace rsub {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam over a named parameter set. Moments are created on first update.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Applies one step to every parameter that has a gradient. `lr_scale`
  /// multiplies the configured rate (for warmup schedules).
  void step(std::map<std::string, Tensor>& params, const ad::GradientMap& grads,
            double lr_scale = 1.0);

  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamConfig config_;
  long t_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace rsub
