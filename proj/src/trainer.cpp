#include "emb/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace emb {

EmbeddingSet embed_corpus(const EncoderModel& model, const Vocabulary& vocab,
                          const Corpus& corpus) {
  require_vocab_match(model, vocab);
  EmbeddingSet set;
  set.n = corpus.documents.size();
  set.d = model.output_dim();
  set.labels = std::vector<int>();
  set.x.reserve(set.n * set.d);
  for (const auto& doc : corpus.documents) {
    set.ids.push_back(doc.id);
    auto it = corpus.label_index.find(doc.label);
    set.labels->push_back(it == corpus.label_index.end() ? -1 : it->second);
    ForwardRecord rec = forward(model, vocab.encode(doc.text), 0, /*train_mode=*/false);
    set.x.insert(set.x.end(), rec.output.begin(), rec.output.end());
  }
  return set;
}

EmbeddingSet labeled_subset(const EmbeddingSet& set) {
  if (!set.labels) throw std::runtime_error("labeled_subset: set has no labels");
  EmbeddingSet out;
  out.d = set.d;
  out.labels = std::vector<int>();
  for (std::size_t i = 0; i < set.n; ++i) {
    if ((*set.labels)[i] < 0) continue;
    out.ids.push_back(set.ids[i]);
    out.labels->push_back((*set.labels)[i]);
    out.x.insert(out.x.end(), set.row(i), set.row(i) + set.d);
    ++out.n;
  }
  if (out.n == 0) throw std::runtime_error("periodic_eval: eval corpus has no labels");
  return out;
}

KnnResult periodic_eval(const EncoderModel& model, const Vocabulary& vocab,
                        const Corpus& eval_corpus, const KnnConfig& knn_cfg) {
  return knn_accuracy(labeled_subset(embed_corpus(model, vocab, eval_corpus)), knn_cfg);
}

namespace {

struct OptStates {
  AdamState embedding, w1, b1, w2, b2;
};

void step_all(EncoderModel& model, OptStates& states, const AdamConfig& cfg,
              std::size_t step) {
  adam_step(model.embedding, model.g_embedding, states.embedding, cfg, step, "embedding");
  if (model.has_head()) {
    adam_step(model.w1, model.g_w1, states.w1, cfg, step, "w1");
    adam_step(model.b1, model.g_b1, states.b1, cfg, step, "b1");
    adam_step(model.w2, model.g_w2, states.w2, cfg, step, "w2");
    adam_step(model.b2, model.g_b2, states.b2, cfg, step, "b2");
  }
}

}  // namespace

TrainResult train(const Corpus& corpus, const Vocabulary& vocab,
                  const TrainConfig& cfg, EncoderModel& model,
                  const Corpus* eval_corpus, const KnnConfig* eval_knn) {
  require_vocab_match(model, vocab);
  if (cfg.batch_size < 2)
    throw std::invalid_argument("train: batch_size must be >= 2");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.eval_every > 0 && eval_corpus == nullptr)
    throw std::invalid_argument("train: eval_every set but no eval corpus given");

  if (cfg.augment.mode == AugmentMode::kDropout)
    model.cfg.dropout_rate = cfg.augment.dropout_rate;

  // all run randomness descends from the single training seed
  AugmentConfig augment = cfg.augment;
  augment.seed = substream_seed(cfg.seed, "trainer/augment");
  PairStream stream(corpus, vocab, augment, cfg.batch_size);
  std::size_t steps_per_epoch = stream.batches_per_epoch();
  TrainResult result;
  result.total_steps = cfg.epochs * steps_per_epoch;

  AdamConfig optim;
  optim.peak_lr = cfg.peak_lr;
  optim.total_steps = result.total_steps;
  optim.warmup_steps = static_cast<std::size_t>(
      cfg.warmup_fraction * static_cast<double>(result.total_steps) + 0.5);
  result.resolved_optim = optim;

  OptStates states;
  KnnConfig knn_cfg = eval_knn ? *eval_knn : KnnConfig{};
  std::size_t global_step = 0;
  auto t0 = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (const auto& batch : stream.epoch_batches(epoch)) {
      ++global_step;
      bool dropout_mode = cfg.augment.mode == AugmentMode::kDropout;

      std::vector<ForwardRecord> anchor_recs, positive_recs;
      std::vector<Vec> anchor_out, positive_out;
      anchor_recs.reserve(batch.size());
      positive_recs.reserve(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        std::uint64_t seed_a, seed_b;
        if (dropout_mode) {
          seed_a = batch.dropout_seeds[i].first;
          seed_b = batch.dropout_seeds[i].second;
        } else {
          std::string tag = "trainer/dropout/step" + std::to_string(global_step) +
                            "/item" + std::to_string(i);
          seed_a = substream_seed(cfg.seed, tag + "/a");
          seed_b = substream_seed(cfg.seed, tag + "/b");
        }
        anchor_recs.push_back(forward(model, batch.anchors[i], seed_a, true));
        positive_recs.push_back(forward(model, batch.positives[i], seed_b, true));
        anchor_out.push_back(anchor_recs.back().output);
        positive_out.push_back(positive_recs.back().output);
      }

      LossOutput loss = infonce_loss(anchor_out, positive_out, cfg.loss);
      if (!std::isfinite(loss.loss))
        throw std::runtime_error("train: non-finite loss at step " +
                                 std::to_string(global_step));

      model.zero_grads();
      backward(model, anchor_recs, loss.grads_anchors);
      backward(model, positive_recs, loss.grads_positives);
      step_all(model, states, optim, global_step);

      TrainLogRecord rec;
      rec.step = global_step;
      rec.epoch = epoch;
      rec.loss = loss.loss;
      rec.lr = lr_at(optim, global_step);
      rec.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();

      if (cfg.eval_every > 0 && global_step % cfg.eval_every == 0) {
        rec.knn_accuracy = periodic_eval(model, vocab, *eval_corpus, knn_cfg).accuracy;
        if (!cfg.checkpoint_dir.empty())
          save_checkpoint(model, cfg.checkpoint_dir + "/ckpt_step" +
                                     std::to_string(global_step) + ".emc");
      }
      result.records.push_back(rec);
    }
    if (!cfg.checkpoint_dir.empty())
      save_checkpoint(model, cfg.checkpoint_dir + "/ckpt_epoch" +
                                 std::to_string(epoch) + ".emc");
  }
  return result;
}

void write_train_log(const std::vector<TrainLogRecord>& records,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write train log: " + path);
  bool any_eval = false;
  for (const auto& rec : records) any_eval |= rec.knn_accuracy.has_value();
  out << "step,epoch,loss,lr,wall_ms" << (any_eval ? ",knn_accuracy" : "") << '\n';
  char buf[64];
  for (const auto& rec : records) {
    out << rec.step << ',' << rec.epoch << ',';
    std::snprintf(buf, sizeof(buf), "%.10g", rec.loss);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.10g", rec.lr);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.3f", rec.wall_ms);
    out << buf;
    if (any_eval) {
      out << ',';
      if (rec.knn_accuracy) {
        std::snprintf(buf, sizeof(buf), "%.10g", *rec.knn_accuracy);
        out << buf;
      }
    }
    out << '\n';
  }
}

}  // namespace emb
