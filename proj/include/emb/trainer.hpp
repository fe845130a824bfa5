#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emb/augment.hpp"
#include "emb/corpus.hpp"
#include "emb/encoder.hpp"
#include "emb/eval.hpp"
#include "emb/objective.hpp"
#include "emb/optim.hpp"

namespace emb {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  AugmentConfig augment;
  LossConfig loss;
  double peak_lr = 5e-1;          // bare embedding layer default
  double warmup_fraction = 0.1;   // of total steps
  std::size_t eval_every = 0;     // 0 = no periodic eval
  std::uint64_t seed = 0;
  std::string checkpoint_dir;     // empty = no checkpoints
};

struct TrainLogRecord {
  std::size_t step = 0;   // 1-based, global
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
  std::optional<double> knn_accuracy;  // periodic eval snapshot
};

// Embeds every document (eval mode, no dropout); labels come from the
// corpus label index, -1 for unlabeled documents.
EmbeddingSet embed_corpus(const EncoderModel& model, const Vocabulary& vocab,
                          const Corpus& corpus);

// Rows with label -1 removed; errors when nothing is labeled.
EmbeddingSet labeled_subset(const EmbeddingSet& set);

KnnResult periodic_eval(const EncoderModel& model, const Vocabulary& vocab,
                        const Corpus& eval_corpus, const KnnConfig& knn_cfg);

struct TrainResult {
  std::vector<TrainLogRecord> records;
  std::size_t total_steps = 0;
  AdamConfig resolved_optim;
};

// One InfoNCE training run. Deterministic given (seed, corpus, config).
// eval_corpus, when given, drives periodic kNN snapshots every
// cfg.eval_every steps.
TrainResult train(const Corpus& corpus, const Vocabulary& vocab,
                  const TrainConfig& cfg, EncoderModel& model,
                  const Corpus* eval_corpus = nullptr,
                  const KnnConfig* eval_knn = nullptr);

// CSV: step,epoch,loss,lr,wall_ms[,knn_accuracy]
void write_train_log(const std::vector<TrainLogRecord>& records,
                     const std::string& path);

}  // namespace emb
