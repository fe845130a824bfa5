#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emb/encoder.hpp"

namespace emb {

struct AdamConfig {
  double peak_lr = 2e-5;  // 5e-1 is the documented choice for the bare embedding layer
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 0;
};

// Linear warmup to peak_lr at warmup_steps, then linear decay to 0 at
// total_steps.
double lr_at(const AdamConfig& cfg, std::size_t step);

struct AdamState {
  Vec m, v;
  std::size_t t = 0;
};

// Bias-corrected Adam update in place, using lr_at(cfg, step).
void adam_step(Vec& params, const Vec& grads, AdamState& state,
               const AdamConfig& cfg, std::size_t step,
               const std::string& tensor_name = "");

}  // namespace emb
