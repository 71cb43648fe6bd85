#pragma once

#include <cstdint>
#include <vector>

#include "motionlab/tensor.hpp"

namespace motionlab {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moment buffers are owned
// here, one pair per parameter, shapes pinned at construction; the step
// counter increments by exactly one per step().
class Adam {
  public:
    Adam(std::vector<Tensor> params, AdamConfig cfg);

    // applies one update using each parameter's accumulated gradient
    void step();
    void zero_grad();

    std::int64_t steps() const { return t_; }
    double lr() const { return cfg_.lr; }
    void set_lr(double lr) { cfg_.lr = lr; }
    const std::vector<Tensor>& params() const { return params_; }

  private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::int64_t t_ = 0;
    AdamConfig cfg_;
};

}  // namespace motionlab
