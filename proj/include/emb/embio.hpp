#pragma once

#include <string>
#include <vector>

#include "emb/eval.hpp"

namespace emb {

// "EMB1": magic, u32 LE n, u32 LE d, then n*d row-major float32.
// Ids and labels travel in a sidecar JSONL (`id`, optional `label`), one
// object per row, same order.
void write_emb1(const EmbeddingSet& set, const std::string& path);
EmbeddingSet read_emb1(const std::string& path);

void write_sidecar(const EmbeddingSet& set,
                   const std::vector<std::string>& label_names,
                   const std::string& path);

// Attaches ids and labels from a sidecar to a bare matrix read by
// read_emb1; returns label names indexed by class id.
std::vector<std::string> read_sidecar(const std::string& path, EmbeddingSet& set);

// Retrieval / reranking judgments:
// {"query_id": ..., "candidates": [{"id": ..., "rel": ...}]}
struct JudgedQuery {
  std::string query_id;
  std::vector<std::pair<std::string, double>> candidates;  // doc id, grade
};
std::vector<JudgedQuery> read_judgments_jsonl(const std::string& path);

// STS pairs: {"text_a": ..., "text_b": ..., "score": ...}
struct StsPair {
  std::string text_a, text_b;
  double score = 0.0;
};
std::vector<StsPair> read_sts_jsonl(const std::string& path);

}  // namespace emb
