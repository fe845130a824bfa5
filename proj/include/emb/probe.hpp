#pragma once

#include <string>
#include <vector>

#include "emb/eval.hpp"

namespace emb {

struct LayerDump {
  std::size_t layer = 0;      // 0 = embedding layer
  std::string pooling;        // mean | cls | sep | token7
  EmbeddingSet set;
};

// kNN accuracy per layer at fixed pooling; the split seed is shared across
// layers so the profile is comparable.
std::vector<std::pair<std::size_t, KnnResult>> layer_profile(
    std::vector<LayerDump> dumps, const KnnConfig& cfg);

// kNN accuracy per pooling tag at a fixed layer, shared split seed.
std::vector<std::pair<std::string, KnnResult>> pooling_profile(
    std::vector<LayerDump> dumps, const KnnConfig& cfg);

// Parses `<model>.layer<l>.<pooling>.emb`; throws on malformed names.
struct DumpName {
  std::string model;
  std::size_t layer = 0;
  std::string pooling;
};
DumpName parse_dump_name(const std::string& filename);

}  // namespace emb
