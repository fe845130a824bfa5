#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emb/corpus.hpp"
#include "emb/rng.hpp"
#include "emb/tokenizer.hpp"

namespace emb {

struct CropConfig {
  std::size_t t = 2;           // consecutive sentences per chunk
  std::size_t min_chars = 100; // per-sentence character filter
  std::size_t max_chars = 250;
};

enum class AugmentMode { kCrop, kDropout, kCropMask };

AugmentMode parse_augment_mode(const std::string& name);
std::string augment_mode_name(AugmentMode mode);

struct AugmentConfig {
  AugmentMode mode = AugmentMode::kCrop;
  CropConfig crop;
  double mask_fraction = 0.0;  // crop_mask mode only
  double dropout_rate = 0.1;   // dropout mode only
  std::uint64_t seed = 0;
};

// A chunk of `t` sentences starting at sentence index `start` (index into
// the document's span list).
struct Chunk {
  std::size_t start = 0;
  std::size_t t = 0;
};

struct PositivePairBatch {
  std::vector<TokenSequence> anchors;
  std::vector<TokenSequence> positives;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> dropout_seeds;  // empty unless dropout mode
  std::vector<std::size_t> doc_indices;
  std::size_t size() const { return anchors.size(); }
};

// All windows of t consecutive surviving sentences, where surviving means
// min_chars <= char_len <= max_chars and the sentences were also
// consecutive in the original document.
std::vector<Chunk> valid_chunks(const std::vector<SentenceSpan>& spans,
                                const CropConfig& cfg);

// Text covered by a chunk: from the start of its first sentence to the end
// of its last, inner gaps included.
std::string_view chunk_text(const Document& doc,
                            const std::vector<SentenceSpan>& spans,
                            const Chunk& chunk);

// Two distinct chunks, uniform without replacement. nullopt when the
// document yields fewer than 2 chunks.
std::optional<std::pair<Chunk, Chunk>> sample_crop_pair(
    const std::vector<Chunk>& chunks, Rng& rng);

struct DropoutPair {
  Chunk chunk;
  std::uint64_t seed_a = 0;
  std::uint64_t seed_b = 0;  // always != seed_a
};

std::optional<DropoutPair> sample_dropout_pair(const std::vector<Chunk>& chunks,
                                               Rng& rng);

// Sets exactly round-half-up(fraction * n_tokens) positions to MASK,
// chosen uniformly without replacement.
TokenSequence apply_mask(const TokenSequence& seq, double fraction, Rng& rng);

// Streams one epoch of positive-pair batches: a seeded permutation of the
// corpus, documents yielding no pair skipped, the trailing incomplete
// batch dropped. Each batch holds b distinct documents.
class PairStream {
 public:
  PairStream(const Corpus& corpus, const Vocabulary& vocab,
             const AugmentConfig& cfg, std::size_t batch_size);

  // Number of eligible documents (those yielding at least one pair).
  std::size_t eligible_count() const { return eligible_.size(); }
  std::size_t batches_per_epoch() const { return eligible_.size() / batch_size_; }

  // Deterministic given (cfg.seed, epoch).
  std::vector<PositivePairBatch> epoch_batches(std::size_t epoch) const;

 private:
  std::optional<std::pair<TokenSequence, TokenSequence>> sample_pair(
      std::size_t doc_index, Rng& rng,
      std::pair<std::uint64_t, std::uint64_t>* seeds) const;

  const Corpus& corpus_;
  const Vocabulary& vocab_;
  AugmentConfig cfg_;
  std::size_t batch_size_;
  std::vector<std::size_t> eligible_;              // doc indices with >=1 pair
  std::vector<std::vector<Chunk>> chunks_;         // per document
};

void dump_pairs_jsonl(const PositivePairBatch& batch, const Corpus& corpus,
                      AugmentMode mode, std::ostream& out);

}  // namespace emb
