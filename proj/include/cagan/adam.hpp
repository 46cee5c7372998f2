#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cagan/layers.hpp"

namespace cagan {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Holds first/second moments for an ordered list
// of parameter blocks; the list must not change for the optimizer's lifetime.
class Adam {
 public:
  Adam(const AdamConfig& config, std::vector<ParamBlock*> params);

  // One update from the accumulated gradients (gradients are not cleared).
  void step();

  std::int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

  // Binary (de)serialization of step count and moments.
  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  AdamConfig config_;
  std::vector<ParamBlock*> params_;
  std::vector<std::vector<float>> m_, v_;
  std::int64_t steps_ = 0;
};

}  // namespace cagan
