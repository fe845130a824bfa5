#include "emb/corpus.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace emb {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// true if the terminator at position i ends a sentence: followed by
// whitespace then an uppercase letter, or by end of text.
bool breaks_here(std::string_view text, std::size_t i) {
  std::size_t j = i + 1;
  if (j == text.size()) return true;
  if (!is_space(text[j])) return false;
  while (j < text.size() && is_space(text[j])) ++j;
  if (j == text.size()) return true;
  return is_upper(text[j]);
}

}  // namespace

std::size_t utf8_char_count(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::vector<SentenceSpan> split_sentences(std::string_view text) {
  std::vector<SentenceSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    std::size_t start = i;
    std::size_t end = text.size();
    for (std::size_t j = i; j < text.size(); ++j) {
      if (is_terminator(text[j]) && breaks_here(text, j)) {
        end = j + 1;
        break;
      }
    }
    // trim trailing whitespace of an unterminated final segment
    while (end > start && is_space(text[end - 1])) --end;
    if (end > start) {
      spans.push_back({start, end, utf8_char_count(text.substr(start, end - start))});
    }
    i = end;
  }
  return spans;
}

Corpus make_corpus(std::vector<Document> documents) {
  Corpus corpus;
  corpus.documents = std::move(documents);
  corpus.spans.reserve(corpus.documents.size());
  std::set<std::string> labels;
  std::unordered_set<std::string> seen_ids;
  for (const auto& doc : corpus.documents) {
    if (!seen_ids.insert(doc.id).second)
      throw std::runtime_error("duplicate document id \"" + doc.id + "\"");
    corpus.spans.push_back(split_sentences(doc.text));
    if (!doc.label.empty()) labels.insert(doc.label);
  }
  int next_id = 0;
  for (const auto& label : labels) corpus.label_index[label] = next_id++;
  return corpus;
}

Corpus load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<Document> docs;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path + ": malformed JSON on line " +
                               std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("text"))
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": expected object with `id` and `text`");
    Document doc;
    doc.id = obj.at("id").get<std::string>();
    doc.text = obj.at("text").get<std::string>();
    if (obj.contains("label") && !obj.at("label").is_null())
      doc.label = obj.at("label").get<std::string>();
    if (!seen_ids.insert(doc.id).second)
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": duplicate id \"" + doc.id + "\"");
    docs.push_back(std::move(doc));
  }
  return make_corpus(std::move(docs));
}

void save_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const auto& doc : corpus.documents) {
    nlohmann::json obj;
    obj["id"] = doc.id;
    obj["text"] = doc.text;
    if (!doc.label.empty()) obj["label"] = doc.label;
    out << obj.dump() << '\n';
  }
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.n_docs = corpus.documents.size();
  stats.n_classes = corpus.label_index.size();
  if (stats.n_docs == 0) return stats;
  double sum = 0.0;
  std::vector<double> lens;
  lens.reserve(stats.n_docs);
  for (const auto& doc : corpus.documents) {
    double len = static_cast<double>(utf8_char_count(doc.text));
    lens.push_back(len);
    sum += len;
  }
  stats.mean_len = sum / static_cast<double>(stats.n_docs);
  double ss = 0.0;
  for (double len : lens) {
    double d = len - stats.mean_len;
    ss += d * d;
  }
  stats.std_len = std::sqrt(ss / static_cast<double>(stats.n_docs));
  return stats;
}

}  // namespace emb
