#pragma once

#include <cstdint>
#include <vector>

#include "synct/autodiff.hpp"

namespace synct {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5, beta2 = 0.999;
  double eps = 1e-8;
};

// ADAM with bias correction. First/second moments are serialized in
// checkpoints so training resumes bit-identically.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<ad::Param*> params, AdamConfig cfg);

  void zero_grad();
  void step();

  std::int64_t steps() const { return t_; }
  const std::vector<Tensor>& m() const { return m_; }
  const std::vector<Tensor>& v() const { return v_; }
  void restore(std::int64_t t, std::vector<Tensor> m, std::vector<Tensor> v);
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<ad::Param*> params_;
  std::vector<Tensor> m_, v_;
  std::int64_t t_ = 0;
  AdamConfig cfg_;
};

}  // namespace synct
