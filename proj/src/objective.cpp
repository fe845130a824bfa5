#include "emb/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace emb {

namespace {

double norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_finite(const std::vector<Vec>& rows, const char* what) {
  for (const auto& row : rows)
    for (double x : row)
      if (!std::isfinite(x))
        throw std::runtime_error(std::string("infonce_loss: non-finite ") + what);
}

}  // namespace

double cosine_similarity(const Vec& a, const Vec& p) {
  if (a.size() != p.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  double na = norm(a), np = norm(p);
  if (na == 0.0 || np == 0.0)
    throw std::runtime_error("cosine_similarity: degenerate embedding (zero norm)");
  return dot(a, p) / (na * np);
}

LossOutput infonce_loss(const std::vector<Vec>& anchors,
                        const std::vector<Vec>& positives,
                        const LossConfig& cfg) {
  if (cfg.temperature <= 0.0)
    throw std::invalid_argument("infonce_loss: temperature must be positive");
  const std::size_t b = anchors.size();
  if (b == 0 || positives.size() != b)
    throw std::invalid_argument("infonce_loss: batch shape mismatch");
  const std::size_t d = anchors[0].size();
  check_finite(anchors, "anchor");
  check_finite(positives, "positive");

  std::vector<double> anchor_norms(b), positive_norms(b);
  for (std::size_t i = 0; i < b; ++i) {
    anchor_norms[i] = norm(anchors[i]);
    positive_norms[i] = norm(positives[i]);
    if (anchor_norms[i] == 0.0 || positive_norms[i] == 0.0)
      throw std::runtime_error("infonce_loss: degenerate embedding (zero norm)");
  }

  // sim[i*b+j] = cos(a_i, p_j)
  std::vector<double> sim(b * b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j)
      sim[i * b + j] = dot(anchors[i], positives[j]) / (anchor_norms[i] * positive_norms[j]);

  // softmax over each row of sim/tau, max-subtracted; dLoss/dsim collected in w
  LossOutput out;
  std::vector<double> w(b * b);
  double inv_tau = 1.0 / cfg.temperature;
  for (std::size_t i = 0; i < b; ++i) {
    double row_max = *std::max_element(sim.begin() + i * b, sim.begin() + (i + 1) * b);
    double denom = 0.0;
    for (std::size_t j = 0; j < b; ++j)
      denom += std::exp((sim[i * b + j] - row_max) * inv_tau);
    out.loss += -(sim[i * b + i] - row_max) * inv_tau + std::log(denom);
    for (std::size_t j = 0; j < b; ++j) {
      double p = std::exp((sim[i * b + j] - row_max) * inv_tau) / denom;
      w[i * b + j] = (p - (i == j ? 1.0 : 0.0)) * inv_tau / static_cast<double>(b);
    }
  }
  out.loss /= static_cast<double>(b);

  out.grads_anchors.assign(b, Vec(d, 0.0));
  out.grads_positives.assign(b, Vec(d, 0.0));
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      double wij = w[i * b + j];
      if (wij == 0.0) continue;
      double inv_ij = 1.0 / (anchor_norms[i] * positive_norms[j]);
      double c = sim[i * b + j];
      double inv_a2 = 1.0 / (anchor_norms[i] * anchor_norms[i]);
      double inv_p2 = 1.0 / (positive_norms[j] * positive_norms[j]);
      for (std::size_t k = 0; k < d; ++k) {
        out.grads_anchors[i][k] += wij * (positives[j][k] * inv_ij - c * anchors[i][k] * inv_a2);
        out.grads_positives[j][k] += wij * (anchors[i][k] * inv_ij - c * positives[j][k] * inv_p2);
      }
    }
  }
  return out;
}

double loss_gradient_check(const std::vector<Vec>& anchors,
                           const std::vector<Vec>& positives,
                           const LossConfig& cfg) {
  const double h = 1e-6;
  LossOutput analytic = infonce_loss(anchors, positives, cfg);
  double max_rel = 0.0;
  auto probe = [&](std::vector<Vec> a, std::vector<Vec> p, std::size_t row,
                   std::size_t col, bool anchor_side, double g) {
    Vec& target = anchor_side ? a[row] : p[row];
    double orig = target[col];
    target[col] = orig + h;
    double up = infonce_loss(a, p, cfg).loss;
    target[col] = orig - h;
    double down = infonce_loss(a, p, cfg).loss;
    double fd = (up - down) / (2.0 * h);
    double rel = std::abs(g - fd) / std::max(1.0, std::abs(g));
    max_rel = std::max(max_rel, rel);
  };
  for (std::size_t i = 0; i < anchors.size(); ++i)
    for (std::size_t k = 0; k < anchors[i].size(); ++k) {
      probe(anchors, positives, i, k, true, analytic.grads_anchors[i][k]);
      probe(anchors, positives, i, k, false, analytic.grads_positives[i][k]);
    }
  return max_rel;
}

}  // namespace emb
