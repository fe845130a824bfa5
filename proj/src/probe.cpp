#include "emb/probe.hpp"

#include <algorithm>
#include <stdexcept>

namespace emb {

namespace {

void check_consistent(const std::vector<LayerDump>& dumps) {
  const auto& first = dumps.front().set;
  for (const auto& dump : dumps) {
    if (dump.set.n != first.n || dump.set.ids != first.ids)
      throw std::runtime_error("probe: dumps disagree on ids");
  }
}

}  // namespace

std::vector<std::pair<std::size_t, KnnResult>> layer_profile(
    std::vector<LayerDump> dumps, const KnnConfig& cfg) {
  if (dumps.size() < 2) throw std::runtime_error("layer_profile: need >=2 layers");
  std::sort(dumps.begin(), dumps.end(),
            [](const LayerDump& a, const LayerDump& b) { return a.layer < b.layer; });
  check_consistent(dumps);
  std::vector<std::pair<std::size_t, KnnResult>> profile;
  for (const auto& dump : dumps)
    profile.emplace_back(dump.layer, knn_accuracy(dump.set, cfg));
  return profile;
}

std::vector<std::pair<std::string, KnnResult>> pooling_profile(
    std::vector<LayerDump> dumps, const KnnConfig& cfg) {
  if (dumps.empty()) throw std::runtime_error("pooling_profile: no dumps");
  std::sort(dumps.begin(), dumps.end(), [](const LayerDump& a, const LayerDump& b) {
    return a.pooling < b.pooling;
  });
  check_consistent(dumps);
  std::vector<std::pair<std::string, KnnResult>> profile;
  for (const auto& dump : dumps)
    profile.emplace_back(dump.pooling, knn_accuracy(dump.set, cfg));
  return profile;
}

DumpName parse_dump_name(const std::string& filename) {
  // <model>.layer<l>.<pooling>.emb
  auto fail = [&]() -> DumpName {
    throw std::runtime_error("probe: bad dump filename (expected "
                             "<model>.layer<l>.<pooling>.emb): " + filename);
  };
  std::string stem = filename;
  auto slash = stem.find_last_of('/');
  if (slash != std::string::npos) stem = stem.substr(slash + 1);
  if (stem.size() < 4 || stem.substr(stem.size() - 4) != ".emb") return fail();
  stem = stem.substr(0, stem.size() - 4);
  auto last_dot = stem.find_last_of('.');
  if (last_dot == std::string::npos) return fail();
  DumpName name;
  name.pooling = stem.substr(last_dot + 1);
  stem = stem.substr(0, last_dot);
  auto layer_pos = stem.rfind(".layer");
  if (layer_pos == std::string::npos) return fail();
  std::string layer_str = stem.substr(layer_pos + 6);
  if (layer_str.empty() ||
      layer_str.find_first_not_of("0123456789") != std::string::npos)
    return fail();
  name.layer = std::stoul(layer_str);
  name.model = stem.substr(0, layer_pos);
  if (name.model.empty() || name.pooling.empty()) return fail();
  return name;
}

}  // namespace emb
