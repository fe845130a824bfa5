#include "emb/embio.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace emb {

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error(path + ": unexpected EOF");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_emb1(const EmbeddingSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write embedding file: " + path);
  out.write("EMB1", 4);
  write_u32(out, static_cast<std::uint32_t>(set.n));
  write_u32(out, static_cast<std::uint32_t>(set.d));
  for (double v : set.x) {
    float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(float));
  }
  if (!out) throw std::runtime_error("embedding write failed: " + path);
}

EmbeddingSet read_emb1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "EMB1", 4) != 0)
    throw std::runtime_error(path + ": bad magic (expected EMB1)");
  EmbeddingSet set;
  set.n = read_u32(in, path);
  set.d = read_u32(in, path);
  set.x.resize(set.n * set.d);
  for (auto& v : set.x) {
    float f;
    if (!in.read(reinterpret_cast<char*>(&f), sizeof(float)))
      throw std::runtime_error(path + ": unexpected EOF");
    v = f;
  }
  // placeholder ids until a sidecar is attached
  set.ids.reserve(set.n);
  for (std::size_t i = 0; i < set.n; ++i) set.ids.push_back("row" + std::to_string(i));
  return set;
}

void write_sidecar(const EmbeddingSet& set,
                   const std::vector<std::string>& label_names,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sidecar: " + path);
  for (std::size_t i = 0; i < set.n; ++i) {
    nlohmann::json obj;
    obj["id"] = set.ids[i];
    if (set.labels) {
      int cls = (*set.labels)[i];
      if (cls >= 0 && static_cast<std::size_t>(cls) < label_names.size())
        obj["label"] = label_names[static_cast<std::size_t>(cls)];
    }
    out << obj.dump() << '\n';
  }
}

std::vector<std::string> read_sidecar(const std::string& path, EmbeddingSet& set) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sidecar: " + path);
  std::vector<std::string> ids;
  std::vector<std::string> raw_labels;
  bool any_label = false;
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
    ids.push_back(obj.at("id").get<std::string>());
    std::string label;
    if (obj.contains("label") && !obj.at("label").is_null())
      label = obj.at("label").get<std::string>();
    if (!label.empty()) any_label = true;
    raw_labels.push_back(std::move(label));
  }
  if (ids.size() != set.n)
    throw std::runtime_error(path + ": sidecar has " + std::to_string(ids.size()) +
                             " rows, embedding file has " + std::to_string(set.n));
  set.ids = std::move(ids);
  std::vector<std::string> label_names;
  if (any_label) {
    std::map<std::string, int> index;
    for (const auto& label : raw_labels)
      if (!label.empty()) index.emplace(label, 0);
    int next = 0;
    for (auto& [name, id] : index) {
      id = next++;
      label_names.push_back(name);
    }
    std::vector<int> labels;
    labels.reserve(set.n);
    for (const auto& label : raw_labels)
      labels.push_back(label.empty() ? -1 : index[label]);
    set.labels = std::move(labels);
  }
  return label_names;
}

std::vector<JudgedQuery> read_judgments_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open judgments file: " + path);
  std::vector<JudgedQuery> queries;
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
    JudgedQuery q;
    q.query_id = obj.at("query_id").get<std::string>();
    for (const auto& cand : obj.at("candidates"))
      q.candidates.emplace_back(cand.at("id").get<std::string>(),
                                cand.at("rel").get<double>());
    queries.push_back(std::move(q));
  }
  return queries;
}

std::vector<StsPair> read_sts_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open STS file: " + path);
  std::vector<StsPair> pairs;
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
    pairs.push_back({obj.at("text_a").get<std::string>(),
                     obj.at("text_b").get<std::string>(),
                     obj.at("score").get<double>()});
  }
  return pairs;
}

}  // namespace emb
