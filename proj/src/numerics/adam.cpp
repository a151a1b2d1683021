#include "rsub/numerics/adam.hpp"

#include <cmath>

#include "rsub/common/error.hpp"

namespace rsub {

void Adam::step(std::map<std::string, Tensor>& params, const ad::GradientMap& grads,
                double lr_scale) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate * lr_scale;
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    require(it != params.end(), ErrorKind::kContract, "adam: unknown parameter " + name);
    Tensor& p = it->second;
    require(p.size() == g.size(), ErrorKind::kContract, "adam: gradient shape mismatch for " + name);
    if (!g.all_finite()) fail(ErrorKind::kDivergence, "non-finite gradient for " + name);
    auto [mit, inserted] = moments_.try_emplace(name);
    Moments& mo = mit->second;
    if (inserted) {
      mo.m = Tensor(p.shape());
      mo.v = Tensor(p.shape());
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double m = b1 * mo.m[i] + (1.0 - b1) * gi;
      const double v = b2 * mo.v[i] + (1.0 - b2) * gi * gi;
      mo.m[i] = static_cast<float>(m);
      mo.v[i] = static_cast<float>(v);
      p[i] -= static_cast<float>(lr * (m / c1) / (std::sqrt(v / c2) + config_.epsilon));
    }
  }
}

}  // namespace rsub
