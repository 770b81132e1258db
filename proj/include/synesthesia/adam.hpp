#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace synesthesia {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction and a per-element learning rate, which is how
/// parameter groups are expressed.
class Adam {
 public:
  explicit Adam(std::size_t n, AdamHyper hyper = {});

  void step(std::span<double> params, std::span<const double> grads,
            std::span<const double> learning_rates);
  void step(std::span<double> params, std::span<const double> grads, double learning_rate);

  int steps_taken() const { return t_; }

 private:
  AdamHyper hyper_;
  std::vector<double> m_, v_;
  int t_ = 0;
};

}  // namespace synesthesia
