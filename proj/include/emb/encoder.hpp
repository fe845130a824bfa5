#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emb/rng.hpp"
#include "emb/tokenizer.hpp"

namespace emb {

struct ProjectionConfig {
  std::size_t hidden = 512;
  std::size_t out = 128;
};

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t dim = 768;
  double dropout_rate = 0.0;
  std::optional<ProjectionConfig> projection;
  double init_scale = 0.02;  // stddev of Gaussian init
  std::uint64_t seed = 0;
};

using Vec = std::vector<double>;

// Token-embedding matrix with mean pooling, optional dropout on token
// vectors, optional one-hidden-layer projection head (affine, relu, affine).
struct EncoderModel {
  EncoderConfig cfg;
  Vec embedding;  // vocab_size x dim, row-major
  Vec w1, b1;     // dim x hidden, hidden
  Vec w2, b2;     // hidden x out, out
  Vec g_embedding, g_w1, g_b1, g_w2, g_b2;  // gradient buffers

  std::size_t output_dim() const {
    return cfg.projection ? cfg.projection->out : cfg.dim;
  }
  void zero_grads();
  bool has_head() const { return cfg.projection.has_value(); }
};

// Per-item state retained by forward for the exact backward pass.
struct ForwardRecord {
  std::vector<TokenId> token_ids;
  Vec dropout_scale;  // n_tokens x dim; empty when no dropout was applied
  Vec pooled;         // dim
  Vec hidden_pre;     // hidden pre-activations (head only)
  Vec output;
};

// Gaussian init, quantized through float32 so a fresh model round-trips
// the checkpoint format losslessly.
EncoderModel init_encoder(const EncoderConfig& cfg);

// Mean pooling over (dropout-masked) embedding rows, then the head if
// configured. Dropout zeroes coordinates with probability p and scales
// survivors by 1/(1-p); applied only in train mode.
ForwardRecord forward(const EncoderModel& model, const TokenSequence& seq,
                      std::uint64_t dropout_seed, bool train_mode);

// Accumulates exact gradients for the realized dropout masks into the
// model's gradient buffers. upstream[i] must match output_dim().
void backward(EncoderModel& model, const std::vector<ForwardRecord>& records,
              const std::vector<Vec>& upstream);

// Checkpoint format "EMC1": magic, u32 LE vocab_size/dim/head_flag/hidden/out,
// then row-major float32 tensors in declared order.
void save_checkpoint(const EncoderModel& model, const std::string& path);
EncoderModel load_checkpoint(const std::string& path);

void require_vocab_match(const EncoderModel& model, const Vocabulary& vocab);

}  // namespace emb
