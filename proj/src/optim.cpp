#include "emb/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace emb {

double lr_at(const AdamConfig& cfg, std::size_t step) {
  if (cfg.peak_lr <= 0.0) throw std::invalid_argument("lr_at: peak_lr must be positive");
  if (cfg.warmup_steps > cfg.total_steps)
    throw std::invalid_argument("lr_at: warmup_steps must be <= total_steps");
  if (step > cfg.total_steps)
    throw std::out_of_range("lr_at: step " + std::to_string(step) +
                            " exceeds total_steps " + std::to_string(cfg.total_steps));
  if (step < cfg.warmup_steps)
    return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  if (cfg.total_steps == cfg.warmup_steps) return step == 0 ? cfg.peak_lr : 0.0;
  return cfg.peak_lr * static_cast<double>(cfg.total_steps - step) /
         static_cast<double>(cfg.total_steps - cfg.warmup_steps);
}

void adam_step(Vec& params, const Vec& grads, AdamState& state,
               const AdamConfig& cfg, std::size_t step,
               const std::string& tensor_name) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: shape mismatch for " + tensor_name);
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state shape mismatch for " + tensor_name);
  for (double g : grads)
    if (!std::isfinite(g))
      throw std::runtime_error("adam_step: non-finite gradient in " +
                               (tensor_name.empty() ? std::string("tensor") : tensor_name));

  double lr = lr_at(cfg, step);
  state.t += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    double m_hat = state.m[i] / bc1;
    double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace emb
