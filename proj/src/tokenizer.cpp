#include "emb/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <stdexcept>

namespace emb {

namespace {
constexpr const char* kSpecials[] = {"[PAD]", "[UNK]", "[MASK]"};
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary Vocabulary::build(const Corpus& corpus, std::size_t max_size,
                             std::size_t min_freq) {
  if (max_size < 4) throw std::invalid_argument("build_vocab: max_size must be >= 4");
  if (min_freq < 1) throw std::invalid_argument("build_vocab: min_freq must be >= 1");
  if (corpus.documents.empty()) throw std::runtime_error("build_vocab: empty corpus");

  std::map<std::string, std::size_t> freq;
  for (const auto& doc : corpus.documents)
    for (auto& tok : word_tokens(doc.text)) ++freq[tok];

  std::vector<std::pair<std::string, std::size_t>> ranked;
  ranked.reserve(freq.size());
  for (auto& [tok, n] : freq)
    if (n >= min_freq) ranked.emplace_back(tok, n);
  // most frequent first, lexicographic tie-break
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > max_size - 3) ranked.resize(max_size - 3);

  Vocabulary vocab;
  for (const char* s : kSpecials) vocab.id_to_token_.emplace_back(s);
  for (auto& [tok, n] : ranked) vocab.id_to_token_.push_back(tok);
  for (std::size_t i = 0; i < vocab.id_to_token_.size(); ++i)
    vocab.token_to_id_[vocab.id_to_token_[i]] = static_cast<TokenId>(i);
  return vocab;
}

TokenSequence Vocabulary::encode(std::string_view text) const {
  TokenSequence seq;
  for (auto& tok : word_tokens(text)) {
    auto it = token_to_id_.find(tok);
    seq.ids.push_back(it == token_to_id_.end() ? kUnkId : it->second);
  }
  if (seq.ids.empty()) seq.ids.push_back(kUnkId);
  return seq;
}

void Vocabulary::save_tsv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  for (std::size_t i = 0; i < id_to_token_.size(); ++i)
    out << id_to_token_[i] << '\t' << i << '\n';
}

Vocabulary Vocabulary::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": expected token<TAB>id");
    std::string tok = line.substr(0, tab);
    std::size_t id = std::stoul(line.substr(tab + 1));
    if (id != vocab.id_to_token_.size())
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": ids must be dense and sorted");
    vocab.token_to_id_[tok] = static_cast<TokenId>(id);
    vocab.id_to_token_.push_back(std::move(tok));
  }
  if (vocab.id_to_token_.size() < 3)
    throw std::runtime_error(path + ": vocabulary missing special tokens");
  return vocab;
}

}  // namespace emb
