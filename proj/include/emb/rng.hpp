#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace emb {

// SplitMix64. All randomness in the toolkit flows from one root seed
// through named substreams so runs are bit-reproducible across platforms
// (std:: distributions are implementation-defined, so we roll our own).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). Rejection sampling, no modulo bias.
  std::size_t uniform_index(std::size_t n);

  // Uniform in [0, 1).
  double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller (one value per call, spare cached).
  double gaussian();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Deterministic substream derivation: FNV-1a over the name, mixed with the
// root seed. Same (seed, name) always yields the same stream.
std::uint64_t substream_seed(std::uint64_t root_seed, std::string_view name);

inline Rng substream(std::uint64_t root_seed, std::string_view name) {
  return Rng(substream_seed(root_seed, name));
}

}  // namespace emb
