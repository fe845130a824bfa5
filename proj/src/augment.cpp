#include "emb/augment.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace emb {

AugmentMode parse_augment_mode(const std::string& name) {
  if (name == "crop") return AugmentMode::kCrop;
  if (name == "dropout") return AugmentMode::kDropout;
  if (name == "crop_mask") return AugmentMode::kCropMask;
  throw std::invalid_argument("unknown augmentation mode: " + name);
}

std::string augment_mode_name(AugmentMode mode) {
  switch (mode) {
    case AugmentMode::kCrop: return "crop";
    case AugmentMode::kDropout: return "dropout";
    case AugmentMode::kCropMask: return "crop_mask";
  }
  return "?";
}

std::vector<Chunk> valid_chunks(const std::vector<SentenceSpan>& spans,
                                const CropConfig& cfg) {
  if (cfg.t < 1) throw std::invalid_argument("CropConfig: t must be >= 1");
  if (cfg.min_chars == 0 || cfg.min_chars >= cfg.max_chars)
    throw std::invalid_argument("CropConfig: require 0 < min_chars < max_chars");
  std::vector<Chunk> chunks;
  // windows over maximal runs of sentences that survive the length filter
  // and were consecutive in the original document
  std::size_t run_start = 0;
  std::size_t i = 0;
  auto flush_run = [&](std::size_t run_end) {
    if (run_end - run_start >= cfg.t)
      for (std::size_t s = run_start; s + cfg.t <= run_end; ++s)
        chunks.push_back({s, cfg.t});
  };
  for (; i < spans.size(); ++i) {
    bool ok = spans[i].char_len >= cfg.min_chars && spans[i].char_len <= cfg.max_chars;
    if (!ok) {
      flush_run(i);
      run_start = i + 1;
    }
  }
  flush_run(spans.size());
  return chunks;
}

std::string_view chunk_text(const Document& doc,
                            const std::vector<SentenceSpan>& spans,
                            const Chunk& chunk) {
  const auto& first = spans.at(chunk.start);
  const auto& last = spans.at(chunk.start + chunk.t - 1);
  return std::string_view(doc.text).substr(first.start, last.end - first.start);
}

std::optional<std::pair<Chunk, Chunk>> sample_crop_pair(
    const std::vector<Chunk>& chunks, Rng& rng) {
  if (chunks.size() < 2) return std::nullopt;
  auto idx = rng.sample_without_replacement(chunks.size(), 2);
  return std::make_pair(chunks[idx[0]], chunks[idx[1]]);
}

std::optional<DropoutPair> sample_dropout_pair(const std::vector<Chunk>& chunks,
                                               Rng& rng) {
  if (chunks.empty()) return std::nullopt;
  DropoutPair pair;
  pair.chunk = chunks[rng.uniform_index(chunks.size())];
  pair.seed_a = rng.next_u64();
  do {
    pair.seed_b = rng.next_u64();
  } while (pair.seed_b == pair.seed_a);
  return pair;
}

TokenSequence apply_mask(const TokenSequence& seq, double fraction, Rng& rng) {
  if (fraction < 0.0 || fraction >= 1.0)
    throw std::invalid_argument("apply_mask: fraction must be in [0,1)");
  // round half up
  auto n_mask = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(seq.size()) + 0.5));
  TokenSequence out = seq;
  for (std::size_t pos : rng.sample_without_replacement(seq.size(), n_mask))
    out.ids[pos] = kMaskId;
  return out;
}

PairStream::PairStream(const Corpus& corpus, const Vocabulary& vocab,
                       const AugmentConfig& cfg, std::size_t batch_size)
    : corpus_(corpus), vocab_(vocab), cfg_(cfg), batch_size_(batch_size) {
  if (batch_size_ < 2)
    throw std::invalid_argument("batch size must be >= 2 for in-batch negatives");
  std::size_t min_chunks = cfg_.mode == AugmentMode::kDropout ? 1 : 2;
  chunks_.reserve(corpus.documents.size());
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    chunks_.push_back(valid_chunks(corpus.spans[i], cfg_.crop));
    if (chunks_.back().size() >= min_chunks) eligible_.push_back(i);
  }
  if (eligible_.size() < batch_size_)
    throw std::runtime_error("not enough documents for one batch: " +
                             std::to_string(eligible_.size()) + " eligible, need " +
                             std::to_string(batch_size_));
}

std::optional<std::pair<TokenSequence, TokenSequence>> PairStream::sample_pair(
    std::size_t doc_index, Rng& rng,
    std::pair<std::uint64_t, std::uint64_t>* seeds) const {
  const auto& doc = corpus_.documents[doc_index];
  const auto& spans = corpus_.spans[doc_index];
  const auto& chunks = chunks_[doc_index];
  if (cfg_.mode == AugmentMode::kDropout) {
    auto pair = sample_dropout_pair(chunks, rng);
    if (!pair) return std::nullopt;
    TokenSequence seq = vocab_.encode(chunk_text(doc, spans, pair->chunk));
    *seeds = {pair->seed_a, pair->seed_b};
    return std::make_pair(seq, seq);
  }
  // crop / crop_mask: two distinct chunks whose token sequences differ
  if (chunks.size() < 2) return std::nullopt;
  std::size_t i = rng.uniform_index(chunks.size());
  std::vector<std::size_t> others;
  others.reserve(chunks.size() - 1);
  for (std::size_t j = 0; j < chunks.size(); ++j)
    if (j != i) others.push_back(j);
  rng.shuffle(others);
  TokenSequence anchor = vocab_.encode(chunk_text(doc, spans, chunks[i]));
  for (std::size_t j : others) {
    TokenSequence positive = vocab_.encode(chunk_text(doc, spans, chunks[j]));
    if (positive == anchor) continue;  // chunks may not coincide as token sequences
    if (cfg_.mode == AugmentMode::kCropMask && cfg_.mask_fraction > 0.0) {
      anchor = apply_mask(anchor, cfg_.mask_fraction, rng);
      positive = apply_mask(positive, cfg_.mask_fraction, rng);
    }
    return std::make_pair(std::move(anchor), std::move(positive));
  }
  return std::nullopt;
}

std::vector<PositivePairBatch> PairStream::epoch_batches(std::size_t epoch) const {
  std::vector<std::size_t> order = eligible_;
  Rng perm_rng = substream(cfg_.seed, "augment/perm/epoch" + std::to_string(epoch));
  perm_rng.shuffle(order);

  std::vector<PositivePairBatch> batches;
  PositivePairBatch batch;
  bool dropout = cfg_.mode == AugmentMode::kDropout;
  for (std::size_t doc_index : order) {
    Rng doc_rng = substream(cfg_.seed, "augment/epoch" + std::to_string(epoch) +
                                           "/doc" + std::to_string(doc_index));
    std::pair<std::uint64_t, std::uint64_t> seeds{0, 0};
    auto pair = sample_pair(doc_index, doc_rng, &seeds);
    if (!pair) continue;  // skipped documents are replaced by the next eligible ones
    batch.anchors.push_back(std::move(pair->first));
    batch.positives.push_back(std::move(pair->second));
    batch.doc_indices.push_back(doc_index);
    if (dropout) batch.dropout_seeds.push_back(seeds);
    if (batch.size() == batch_size_) {
      batches.push_back(std::move(batch));
      batch = PositivePairBatch{};
    }
  }
  // trailing incomplete batch is dropped
  return batches;
}

void dump_pairs_jsonl(const PositivePairBatch& batch, const Corpus& corpus,
                      AugmentMode mode, std::ostream& out) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    nlohmann::json obj;
    obj["doc_id"] = corpus.documents[batch.doc_indices[i]].id;
    obj["anchor_ids"] = batch.anchors[i].ids;
    obj["positive_ids"] = batch.positives[i].ids;
    obj["mode"] = augment_mode_name(mode);
    out << obj.dump() << '\n';
  }
}

}  // namespace emb
