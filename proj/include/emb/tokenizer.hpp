#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emb/corpus.hpp"

namespace emb {

using TokenId = std::uint32_t;

constexpr TokenId kPadId = 0;
constexpr TokenId kUnkId = 1;
constexpr TokenId kMaskId = 2;

struct TokenSequence {
  std::vector<TokenId> ids;
  std::size_t size() const { return ids.size(); }
  bool operator==(const TokenSequence&) const = default;
};

class Vocabulary {
 public:
  static Vocabulary build(const Corpus& corpus, std::size_t max_size = 30000,
                          std::size_t min_freq = 1);

  TokenSequence encode(std::string_view text) const;

  std::size_t size() const { return id_to_token_.size(); }
  const std::string& token(TokenId id) const { return id_to_token_.at(id); }

  void save_tsv(const std::string& path) const;
  static Vocabulary load_tsv(const std::string& path);

 private:
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Lowercased maximal runs of ASCII alphanumeric characters.
std::vector<std::string> word_tokens(std::string_view text);

}  // namespace emb
