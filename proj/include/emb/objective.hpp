#pragma once

#include <vector>

#include "emb/encoder.hpp"

namespace emb {

struct LossConfig {
  double temperature = 0.05;
};

struct LossOutput {
  double loss = 0.0;
  std::vector<Vec> grads_anchors;    // b x d
  std::vector<Vec> grads_positives;  // b x d
};

double cosine_similarity(const Vec& a, const Vec& p);

// InfoNCE over a batch: for each anchor i the denominator runs over the
// cosine similarities to all positives j in the batch (including j = i),
// scaled by the temperature. Log-sum-exp uses row-max subtraction.
// Returns the batch-mean loss and exact gradients w.r.t. every embedding.
LossOutput infonce_loss(const std::vector<Vec>& anchors,
                        const std::vector<Vec>& positives,
                        const LossConfig& cfg);

// Central finite differences (h = 1e-6) against the analytic gradients on
// the given batch; returns the max relative error.
double loss_gradient_check(const std::vector<Vec>& anchors,
                           const std::vector<Vec>& positives,
                           const LossConfig& cfg);

}  // namespace emb
