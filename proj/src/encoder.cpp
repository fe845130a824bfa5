#include "emb/encoder.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace emb {

namespace {

Vec gaussian_vec(std::size_t n, double scale, Rng& rng) {
  Vec v(n);
  for (auto& x : v) x = static_cast<double>(static_cast<float>(scale * rng.gaussian()));
  return v;
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error("checkpoint: unexpected EOF");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_tensor_f32(std::ofstream& out, const Vec& v) {
  for (double x : v) {
    float f = static_cast<float>(x);
    out.write(reinterpret_cast<const char*>(&f), sizeof(float));
  }
}

Vec read_tensor_f32(std::ifstream& in, std::size_t n) {
  Vec v(n);
  for (std::size_t i = 0; i < n; ++i) {
    float f;
    if (!in.read(reinterpret_cast<char*>(&f), sizeof(float)))
      throw std::runtime_error("checkpoint: unexpected EOF");
    v[i] = f;
  }
  return v;
}

}  // namespace

void EncoderModel::zero_grads() {
  std::fill(g_embedding.begin(), g_embedding.end(), 0.0);
  std::fill(g_w1.begin(), g_w1.end(), 0.0);
  std::fill(g_b1.begin(), g_b1.end(), 0.0);
  std::fill(g_w2.begin(), g_w2.end(), 0.0);
  std::fill(g_b2.begin(), g_b2.end(), 0.0);
}

EncoderModel init_encoder(const EncoderConfig& cfg) {
  if (cfg.vocab_size == 0 || cfg.dim == 0)
    throw std::invalid_argument("encoder: vocab_size and dim must be positive");
  if (cfg.projection && (cfg.projection->hidden == 0 || cfg.projection->out == 0))
    throw std::invalid_argument("encoder: projection dims must be positive");
  EncoderModel model;
  model.cfg = cfg;
  Rng rng = substream(cfg.seed, "encoder/init");
  model.embedding = gaussian_vec(cfg.vocab_size * cfg.dim, cfg.init_scale, rng);
  if (cfg.projection) {
    model.w1 = gaussian_vec(cfg.dim * cfg.projection->hidden, cfg.init_scale, rng);
    model.b1 = Vec(cfg.projection->hidden, 0.0);
    model.w2 = gaussian_vec(cfg.projection->hidden * cfg.projection->out, cfg.init_scale, rng);
    model.b2 = Vec(cfg.projection->out, 0.0);
  }
  model.g_embedding = Vec(model.embedding.size(), 0.0);
  model.g_w1 = Vec(model.w1.size(), 0.0);
  model.g_b1 = Vec(model.b1.size(), 0.0);
  model.g_w2 = Vec(model.w2.size(), 0.0);
  model.g_b2 = Vec(model.b2.size(), 0.0);
  return model;
}

ForwardRecord forward(const EncoderModel& model, const TokenSequence& seq,
                      std::uint64_t dropout_seed, bool train_mode) {
  const std::size_t d = model.cfg.dim;
  const std::size_t n = seq.size();
  if (n == 0) throw std::invalid_argument("forward: empty token sequence");

  ForwardRecord rec;
  rec.token_ids = seq.ids;
  bool use_dropout = train_mode && model.cfg.dropout_rate > 0.0;
  double p = model.cfg.dropout_rate;
  if (use_dropout) {
    Rng rng(dropout_seed);
    rec.dropout_scale.resize(n * d);
    double keep_scale = 1.0 / (1.0 - p);
    for (auto& s : rec.dropout_scale) s = rng.bernoulli(p) ? 0.0 : keep_scale;
  }

  rec.pooled.assign(d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    TokenId id = seq.ids[t];
    if (id >= model.cfg.vocab_size)
      throw std::out_of_range("forward: token id out of vocabulary range");
    const double* row = &model.embedding[static_cast<std::size_t>(id) * d];
    if (use_dropout) {
      const double* scale = &rec.dropout_scale[t * d];
      for (std::size_t c = 0; c < d; ++c) rec.pooled[c] += row[c] * scale[c];
    } else {
      for (std::size_t c = 0; c < d; ++c) rec.pooled[c] += row[c];
    }
  }
  double inv_n = 1.0 / static_cast<double>(n);
  for (auto& x : rec.pooled) x *= inv_n;

  if (!model.has_head()) {
    rec.output = rec.pooled;
    return rec;
  }
  const std::size_t h = model.cfg.projection->hidden;
  const std::size_t o = model.cfg.projection->out;
  rec.hidden_pre.assign(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    double acc = model.b1[j];
    for (std::size_t c = 0; c < d; ++c) acc += rec.pooled[c] * model.w1[c * h + j];
    rec.hidden_pre[j] = acc;
  }
  rec.output.assign(o, 0.0);
  for (std::size_t k = 0; k < o; ++k) {
    double acc = model.b2[k];
    for (std::size_t j = 0; j < h; ++j) {
      double a = rec.hidden_pre[j] > 0.0 ? rec.hidden_pre[j] : 0.0;
      acc += a * model.w2[j * o + k];
    }
    rec.output[k] = acc;
  }
  return rec;
}

void backward(EncoderModel& model, const std::vector<ForwardRecord>& records,
              const std::vector<Vec>& upstream) {
  if (records.size() != upstream.size())
    throw std::invalid_argument("backward: records/upstream size mismatch");
  const std::size_t d = model.cfg.dim;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const ForwardRecord& rec = records[r];
    const Vec& g_out = upstream[r];
    if (g_out.size() != model.output_dim())
      throw std::invalid_argument("backward: upstream gradient shape mismatch");

    Vec g_pooled;
    if (model.has_head()) {
      const std::size_t h = model.cfg.projection->hidden;
      const std::size_t o = model.cfg.projection->out;
      Vec g_hidden(h, 0.0);
      for (std::size_t j = 0; j < h; ++j) {
        double a = rec.hidden_pre[j] > 0.0 ? rec.hidden_pre[j] : 0.0;
        double g_a = 0.0;
        for (std::size_t k = 0; k < o; ++k) {
          model.g_w2[j * o + k] += a * g_out[k];
          g_a += model.w2[j * o + k] * g_out[k];
        }
        // relu subgradient: 0 at 0
        g_hidden[j] = rec.hidden_pre[j] > 0.0 ? g_a : 0.0;
      }
      for (std::size_t k = 0; k < o; ++k) model.g_b2[k] += g_out[k];
      g_pooled.assign(d, 0.0);
      for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t j = 0; j < h; ++j) {
          model.g_w1[c * h + j] += rec.pooled[c] * g_hidden[j];
          g_pooled[c] += model.w1[c * h + j] * g_hidden[j];
        }
      }
      for (std::size_t j = 0; j < h; ++j) model.g_b1[j] += g_hidden[j];
    } else {
      g_pooled = g_out;
    }

    const std::size_t n = rec.token_ids.size();
    double inv_n = 1.0 / static_cast<double>(n);
    bool dropped = !rec.dropout_scale.empty();
    for (std::size_t t = 0; t < n; ++t) {
      double* g_row = &model.g_embedding[static_cast<std::size_t>(rec.token_ids[t]) * d];
      if (dropped) {
        const double* scale = &rec.dropout_scale[t * d];
        for (std::size_t c = 0; c < d; ++c) g_row[c] += inv_n * scale[c] * g_pooled[c];
      } else {
        for (std::size_t c = 0; c < d; ++c) g_row[c] += inv_n * g_pooled[c];
      }
    }
  }
}

void save_checkpoint(const EncoderModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write("EMC1", 4);
  write_u32(out, static_cast<std::uint32_t>(model.cfg.vocab_size));
  write_u32(out, static_cast<std::uint32_t>(model.cfg.dim));
  write_u32(out, model.has_head() ? 1u : 0u);
  write_u32(out, model.has_head() ? static_cast<std::uint32_t>(model.cfg.projection->hidden) : 0u);
  write_u32(out, model.has_head() ? static_cast<std::uint32_t>(model.cfg.projection->out) : 0u);
  write_tensor_f32(out, model.embedding);
  if (model.has_head()) {
    write_tensor_f32(out, model.w1);
    write_tensor_f32(out, model.b1);
    write_tensor_f32(out, model.w2);
    write_tensor_f32(out, model.b2);
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

EncoderModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "EMC1", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic (expected EMC1): " + path);
  EncoderConfig cfg;
  cfg.vocab_size = read_u32(in);
  cfg.dim = read_u32(in);
  std::uint32_t head_flag = read_u32(in);
  std::uint32_t hidden = read_u32(in);
  std::uint32_t out_dim = read_u32(in);
  if (cfg.vocab_size == 0 || cfg.dim == 0)
    throw std::runtime_error("checkpoint: bad shape header");
  if (head_flag) cfg.projection = ProjectionConfig{hidden, out_dim};

  EncoderModel model;
  model.cfg = cfg;
  model.embedding = read_tensor_f32(in, cfg.vocab_size * cfg.dim);
  if (head_flag) {
    model.w1 = read_tensor_f32(in, cfg.dim * hidden);
    model.b1 = read_tensor_f32(in, hidden);
    model.w2 = read_tensor_f32(in, hidden * out_dim);
    model.b2 = read_tensor_f32(in, out_dim);
  }
  model.g_embedding = Vec(model.embedding.size(), 0.0);
  model.g_w1 = Vec(model.w1.size(), 0.0);
  model.g_b1 = Vec(model.b1.size(), 0.0);
  model.g_w2 = Vec(model.w2.size(), 0.0);
  model.g_b2 = Vec(model.b2.size(), 0.0);
  return model;
}

void require_vocab_match(const EncoderModel& model, const Vocabulary& vocab) {
  if (model.cfg.vocab_size != vocab.size())
    throw std::runtime_error("checkpoint vocab size " +
                             std::to_string(model.cfg.vocab_size) +
                             " does not match vocabulary size " +
                             std::to_string(vocab.size()));
}

}  // namespace emb
