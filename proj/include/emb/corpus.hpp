#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace emb {

struct Document {
  std::string id;
  std::string text;   // UTF-8
  std::string label;  // class name, may be empty
};

struct SentenceSpan {
  std::size_t start = 0;     // byte offset
  std::size_t end = 0;       // byte offset, exclusive
  std::size_t char_len = 0;  // UTF-8 code points in [start, end)
};

struct Corpus {
  std::vector<Document> documents;
  std::vector<std::vector<SentenceSpan>> spans;  // per document
  std::map<std::string, int> label_index;        // label -> dense class id
};

struct CorpusStats {
  std::size_t n_docs = 0;
  std::size_t n_classes = 0;
  double mean_len = 0.0;  // mean character length per document
  double std_len = 0.0;   // population standard deviation
};

// UTF-8 code point count (continuation bytes are not counted).
std::size_t utf8_char_count(std::string_view s);

// Splits on . ! ? when the terminator is followed by whitespace and an
// uppercase letter, or by end of text. A trailing unterminated segment
// becomes its own span. Spans exclude surrounding whitespace.
std::vector<SentenceSpan> split_sentences(std::string_view text);

// One JSON object per line: `id`, `text`, optional `label`.
Corpus load_jsonl(const std::string& path);

Corpus make_corpus(std::vector<Document> documents);

void save_jsonl(const Corpus& corpus, const std::string& path);

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace emb
