// embtool: build vocabularies, train contrastive embedding models, and
// evaluate embeddings (kNN, clustering, retrieval, reranking, STS, probes).
//
// Exit codes: 0 success, 2 flag parsing, 3 missing input file,
// 4 configuration validation, 5 runtime failure. Errors print a single
// machine-parsable line: `embtool: error: <kind>: <message>`.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "emb/augment.hpp"
#include "emb/corpus.hpp"
#include "emb/embio.hpp"
#include "emb/encoder.hpp"
#include "emb/eval.hpp"
#include "emb/objective.hpp"
#include "emb/probe.hpp"
#include "emb/rng.hpp"
#include "emb/svg.hpp"
#include "emb/tokenizer.hpp"
#include "emb/trainer.hpp"

using json = nlohmann::ordered_json;
using namespace emb;

namespace {

constexpr const char* kVersion = "1.0.0";

struct MissingFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string out_dir_value;  // --out-dir, EMB_OUT_DIR, or "."

std::filesystem::path out_path(const std::string& name) {
  return std::filesystem::path(out_dir_value) / name;
}

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw MissingFileError("no such file: " + path);
}

// FNV-1a over the raw bytes; hex string for the manifest.
std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Written before any command output so a run is identifiable even when it
// fails half-way.
void write_manifest(const std::string& command, std::uint64_t seed,
                    const std::vector<std::string>& inputs, const json& config) {
  json manifest;
  manifest["tool"] = "embtool";
  manifest["version"] = kVersion;
  manifest["command"] = command;
  manifest["seed"] = seed;
  json digests = json::object();
  for (const auto& path : inputs) digests[path] = file_digest(path);
  manifest["input_digests"] = digests;
  manifest["config"] = config;
  std::filesystem::create_directories(out_dir_value);
  auto path = out_path(command + "_manifest.json");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  out << manifest.dump(2) << '\n';
}

Corpus load_corpus_checked(const std::string& path) {
  require_file(path);
  return load_jsonl(path);
}

std::vector<std::string> label_names(const Corpus& corpus) {
  std::vector<std::string> names(corpus.label_index.size());
  for (const auto& [name, id] : corpus.label_index)
    names[static_cast<std::size_t>(id)] = name;
  return names;
}

EmbeddingSet load_embeddings(const std::string& emb_path,
                             const std::string& sidecar_path) {
  require_file(emb_path);
  require_file(sidecar_path);
  EmbeddingSet set = read_emb1(emb_path);
  read_sidecar(sidecar_path, set);
  return set;
}

// ---------------------------------------------------------------------------
// train / sweep share this bundle of flags.

struct TrainFlags {
  std::string corpus_path;
  std::string vocab_path;       // empty: build from the corpus
  std::string eval_corpus_path; // empty: reuse the training corpus
  std::string mode = "crop";
  std::size_t dim = 768;
  std::size_t head_hidden = 0, head_out = 0;  // both set: projection head
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::size_t crop_t = 2;
  double temperature = 0.05;
  double lr = 0.5;
  double warmup_fraction = 0.1;
  double mask_fraction = 0.15;
  double dropout_rate = 0.1;
  std::size_t eval_every = 0;
  std::size_t knn_k = 10;
  std::uint64_t seed = 0;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--corpus", f.corpus_path, "training corpus JSONL")->required();
  cmd->add_option("--vocab", f.vocab_path, "vocabulary TSV (default: build)");
  cmd->add_option("--eval-corpus", f.eval_corpus_path,
                  "corpus for periodic kNN eval (default: training corpus)");
  cmd->add_option("--mode", f.mode, "crop | dropout | crop_mask");
  cmd->add_option("--dim", f.dim, "embedding dimension");
  cmd->add_option("--head-hidden", f.head_hidden, "projection head hidden size");
  cmd->add_option("--head-out", f.head_out, "projection head output size");
  cmd->add_option("--batch-size", f.batch_size, "positive pairs per step");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--crop-t", f.crop_t, "sentences per crop chunk");
  cmd->add_option("--temperature", f.temperature, "InfoNCE temperature");
  cmd->add_option("--lr", f.lr, "peak learning rate");
  cmd->add_option("--warmup-fraction", f.warmup_fraction, "warmup fraction");
  cmd->add_option("--mask-fraction", f.mask_fraction, "crop_mask token fraction");
  cmd->add_option("--dropout-rate", f.dropout_rate, "dropout-mode rate");
  cmd->add_option("--eval-every", f.eval_every, "kNN snapshot every N steps");
  cmd->add_option("--knn-k", f.knn_k, "k for periodic and final kNN eval");
  cmd->add_option("--seed", f.seed, "root random seed");
}

json train_config_json(const TrainFlags& f) {
  json cfg;
  cfg["mode"] = f.mode;
  cfg["dim"] = f.dim;
  if (f.head_hidden > 0 && f.head_out > 0) {
    cfg["head_hidden"] = f.head_hidden;
    cfg["head_out"] = f.head_out;
  }
  cfg["batch_size"] = f.batch_size;
  cfg["epochs"] = f.epochs;
  cfg["crop_t"] = f.crop_t;
  cfg["temperature"] = f.temperature;
  cfg["lr"] = f.lr;
  cfg["warmup_fraction"] = f.warmup_fraction;
  cfg["mask_fraction"] = f.mask_fraction;
  cfg["dropout_rate"] = f.dropout_rate;
  cfg["eval_every"] = f.eval_every;
  cfg["knn_k"] = f.knn_k;
  return cfg;
}

TrainConfig resolve_train_config(const TrainFlags& f) {
  TrainConfig cfg;
  cfg.batch_size = f.batch_size;
  cfg.epochs = f.epochs;
  cfg.augment.mode = parse_augment_mode(f.mode);
  cfg.augment.crop.t = f.crop_t;
  cfg.augment.mask_fraction = f.mask_fraction;
  cfg.augment.dropout_rate = f.dropout_rate;
  cfg.loss.temperature = f.temperature;
  cfg.peak_lr = f.lr;
  cfg.warmup_fraction = f.warmup_fraction;
  cfg.eval_every = f.eval_every;
  cfg.seed = f.seed;
  return cfg;
}

void validate_train_flags(const TrainFlags& f) {
  if (f.temperature <= 0.0) throw ConfigError("temperature must be > 0");
  if (f.lr <= 0.0) throw ConfigError("lr must be > 0");
  if (f.warmup_fraction < 0.0 || f.warmup_fraction > 1.0)
    throw ConfigError("warmup-fraction must be in [0,1]");
  if (f.mask_fraction < 0.0 || f.mask_fraction > 1.0)
    throw ConfigError("mask-fraction must be in [0,1]");
  if (f.dropout_rate < 0.0 || f.dropout_rate >= 1.0)
    throw ConfigError("dropout-rate must be in [0,1)");
  if (f.dim == 0) throw ConfigError("dim must be > 0");
  if (f.crop_t == 0) throw ConfigError("crop-t must be > 0");
  if ((f.head_hidden > 0) != (f.head_out > 0))
    throw ConfigError("head-hidden and head-out must be given together");
  try {
    parse_augment_mode(f.mode);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

struct TrainedRun {
  EncoderModel model;
  TrainResult result;
  Vocabulary vocab;
};

TrainedRun run_training(const TrainFlags& f, const Corpus& corpus,
                        const Corpus* eval_corpus, const std::string& ckpt_dir) {
  TrainedRun run;
  if (!f.vocab_path.empty()) {
    require_file(f.vocab_path);
    run.vocab = Vocabulary::load_tsv(f.vocab_path);
  } else {
    run.vocab = Vocabulary::build(corpus);
  }
  EncoderConfig ecfg;
  ecfg.vocab_size = run.vocab.size();
  ecfg.dim = f.dim;
  if (f.head_hidden > 0 && f.head_out > 0)
    ecfg.projection = ProjectionConfig{f.head_hidden, f.head_out};
  ecfg.seed = substream_seed(f.seed, "cli/init");
  run.model = init_encoder(ecfg);

  TrainConfig tcfg = resolve_train_config(f);
  tcfg.checkpoint_dir = ckpt_dir;
  KnnConfig knn;
  knn.k = f.knn_k;
  knn.seed = substream_seed(f.seed, "cli/eval_split");
  run.result = train(corpus, run.vocab, tcfg, run.model,
                     tcfg.eval_every > 0 ? eval_corpus : nullptr,
                     tcfg.eval_every > 0 ? &knn : nullptr);
  return run;
}

void write_train_charts(const TrainResult& result, const std::string& stem) {
  SvgSeries loss_series{"loss", {}};
  SvgSeries knn_series{"knn_accuracy", {}};
  for (const auto& rec : result.records) {
    loss_series.points.emplace_back(static_cast<double>(rec.step), rec.loss);
    if (rec.knn_accuracy)
      knn_series.points.emplace_back(static_cast<double>(rec.step),
                                     *rec.knn_accuracy);
  }
  write_svg_line_chart(out_path(stem + "_loss.svg").string(), "training loss",
                       "step", "loss", {loss_series});
  if (!knn_series.points.empty())
    write_svg_line_chart(out_path(stem + "_knn.svg").string(), "kNN accuracy",
                         "step", "accuracy (%)", {knn_series});
}

// ---------------------------------------------------------------------------
// Commands.

int cmd_build_vocab(const std::string& corpus_path, std::size_t max_size,
                    std::size_t min_freq, std::string out_name,
                    std::uint64_t seed) {
  Corpus corpus = load_corpus_checked(corpus_path);
  if (max_size < 4) throw ConfigError("max-size must be >= 4");
  json cfg;
  cfg["max_size"] = max_size;
  cfg["min_freq"] = min_freq;
  cfg["out"] = out_name;
  write_manifest("build-vocab", seed, {corpus_path}, cfg);
  Vocabulary vocab = Vocabulary::build(corpus, max_size, min_freq);
  vocab.save_tsv(out_path(out_name).string());
  std::cout << "vocabulary: " << vocab.size() << " tokens -> "
            << out_path(out_name).string() << '\n';
  return 0;
}

int cmd_train(const TrainFlags& f) {
  validate_train_flags(f);
  Corpus corpus = load_corpus_checked(f.corpus_path);
  Corpus eval_corpus_storage;
  const Corpus* eval_corpus = &corpus;
  std::vector<std::string> inputs = {f.corpus_path};
  if (!f.eval_corpus_path.empty()) {
    eval_corpus_storage = load_corpus_checked(f.eval_corpus_path);
    eval_corpus = &eval_corpus_storage;
    inputs.push_back(f.eval_corpus_path);
  }
  if (!f.vocab_path.empty()) inputs.push_back(f.vocab_path);
  write_manifest("train", f.seed, inputs, train_config_json(f));

  TrainedRun run = run_training(f, corpus, eval_corpus, out_dir_value);
  save_checkpoint(run.model, out_path("model.emc").string());
  if (f.vocab_path.empty()) run.vocab.save_tsv(out_path("vocab.tsv").string());
  write_train_log(run.result.records, out_path("train_log.csv").string());
  write_train_charts(run.result, "train");
  std::cout << "trained " << run.result.total_steps << " steps; final loss "
            << run.result.records.back().loss << "; model -> "
            << out_path("model.emc").string() << '\n';
  return 0;
}

int cmd_embed(const std::string& ckpt_path, const std::string& vocab_path,
              const std::string& corpus_path, const std::string& out_name,
              std::uint64_t seed) {
  require_file(ckpt_path);
  require_file(vocab_path);
  Corpus corpus = load_corpus_checked(corpus_path);
  json cfg;
  cfg["checkpoint"] = ckpt_path;
  cfg["out"] = out_name;
  write_manifest("embed", seed, {ckpt_path, vocab_path, corpus_path}, cfg);

  EncoderModel model = load_checkpoint(ckpt_path);
  Vocabulary vocab = Vocabulary::load_tsv(vocab_path);
  require_vocab_match(model, vocab);
  EmbeddingSet set = embed_corpus(model, vocab, corpus);
  std::string emb_name = out_name;
  std::string sidecar_name =
      emb_name.size() > 4 && emb_name.substr(emb_name.size() - 4) == ".emb"
          ? emb_name.substr(0, emb_name.size() - 4) + ".jsonl"
          : emb_name + ".jsonl";
  write_emb1(set, out_path(emb_name).string());
  write_sidecar(set, label_names(corpus), out_path(sidecar_name).string());
  std::cout << "embedded " << set.n << " documents (d=" << set.d << ") -> "
            << out_path(emb_name).string() << '\n';
  return 0;
}

int cmd_eval_knn(const std::string& emb_path, const std::string& labels_path,
                 const KnnConfig& knn, const std::string& out_name) {
  EmbeddingSet set = load_embeddings(emb_path, labels_path);
  json cfg;
  cfg["k"] = knn.k;
  cfg["metric"] = knn.metric == KnnMetric::kEuclidean ? "euclidean" : "cosine";
  cfg["split"] = knn.split;
  cfg["post"] = knn.post == PostProcess::kRaw
                    ? "raw"
                    : (knn.post == PostProcess::kCentered ? "centered" : "whitened");
  write_manifest("eval-knn", knn.seed, {emb_path, labels_path}, cfg);
  KnnResult result = knn_accuracy(labeled_subset(set), knn);
  EvalReport report;
  report.rows.push_back({"knn_accuracy", result.accuracy, result.stderr_pct});
  report.write_csv(out_path(out_name).string());
  std::cout << "knn_accuracy " << result.accuracy << " +/- " << result.stderr_pct
            << " (n_test " << result.n_test << ")\n";
  return 0;
}

int cmd_eval_cluster(const std::string& emb_path, const std::string& labels_path,
                     std::size_t clusters, std::size_t batches,
                     std::uint64_t seed, const std::string& out_name) {
  if (clusters < 2) throw ConfigError("clusters must be >= 2");
  if (batches < 1) throw ConfigError("batches must be >= 1");
  EmbeddingSet set = load_embeddings(emb_path, labels_path);
  json cfg;
  cfg["clusters"] = clusters;
  cfg["batches"] = batches;
  write_manifest("eval-cluster", seed, {emb_path, labels_path}, cfg);
  EmbeddingSet labeled = labeled_subset(set);
  double v = batches == 1
                 ? vmeasure_clustering(labeled, clusters, {}, seed)
                 : vmeasure_clustering_batched(labeled, clusters, batches, {}, seed);
  EvalReport report;
  report.rows.push_back({"v_measure", v, std::nullopt});
  report.write_csv(out_path(out_name).string());
  std::cout << "v_measure " << v << '\n';
  return 0;
}

// Rank each judged query's candidate list by cosine to the query embedding.
std::vector<RankedQuery> ranked_queries(const EmbeddingSet& set,
                                        const std::vector<JudgedQuery>& judged) {
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < set.n; ++i) row_of[set.ids[i]] = i;
  auto row_vec = [&](const std::string& id) {
    auto it = row_of.find(id);
    if (it == row_of.end())
      throw std::runtime_error("id \"" + id + "\" not in the embedding set");
    return Vec(set.row(it->second), set.row(it->second) + set.d);
  };
  std::vector<RankedQuery> queries;
  for (const auto& jq : judged) {
    RankedQuery rq;
    rq.query_id = jq.query_id;
    Vec q = row_vec(jq.query_id);
    std::vector<std::pair<std::pair<double, std::string>, std::string>> order;
    for (const auto& [doc_id, grade] : jq.candidates) {
      rq.judgments[doc_id] = grade;
      order.push_back({{-cosine_similarity(q, row_vec(doc_id)), doc_id}, doc_id});
    }
    std::sort(order.begin(), order.end());
    for (const auto& entry : order) rq.ranking.push_back(entry.second);
    queries.push_back(std::move(rq));
  }
  return queries;
}

int cmd_eval_retrieval(const std::string& emb_path, const std::string& ids_path,
                       const std::string& judgments_path, std::size_t k,
                       std::uint64_t seed, const std::string& out_name) {
  if (k < 1) throw ConfigError("k must be >= 1");
  EmbeddingSet set = load_embeddings(emb_path, ids_path);
  require_file(judgments_path);
  auto judged = read_judgments_jsonl(judgments_path);
  json cfg;
  cfg["k"] = k;
  write_manifest("eval-retrieval", seed, {emb_path, ids_path, judgments_path}, cfg);
  NdcgSummary summary = mean_ndcg_at_k(ranked_queries(set, judged), k);
  EvalReport report;
  report.rows.push_back({"ndcg_at_" + std::to_string(k), summary.mean, std::nullopt});
  report.rows.push_back(
      {"n_scored", static_cast<double>(summary.n_scored), std::nullopt});
  report.rows.push_back(
      {"n_excluded", static_cast<double>(summary.n_excluded), std::nullopt});
  report.write_csv(out_path(out_name).string());
  std::cout << "ndcg@" << k << " " << summary.mean << " over " << summary.n_scored
            << " queries (" << summary.n_excluded << " excluded)\n";
  return 0;
}

int cmd_eval_rerank(const std::string& emb_path, const std::string& ids_path,
                    const std::string& judgments_path, std::uint64_t seed,
                    const std::string& out_name) {
  EmbeddingSet set = load_embeddings(emb_path, ids_path);
  require_file(judgments_path);
  auto judged = read_judgments_jsonl(judgments_path);
  write_manifest("eval-rerank", seed, {emb_path, ids_path, judgments_path},
                 json::object());
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < set.n; ++i) row_of[set.ids[i]] = i;
  auto row_vec = [&](const std::string& id) {
    auto it = row_of.find(id);
    if (it == row_of.end())
      throw std::runtime_error("id \"" + id + "\" not in the embedding set");
    return Vec(set.row(it->second), set.row(it->second) + set.d);
  };
  std::vector<RerankQuery> queries;
  for (const auto& jq : judged) {
    RerankQuery rq;
    rq.query_id = jq.query_id;
    rq.query_embedding = row_vec(jq.query_id);
    for (const auto& [doc_id, grade] : jq.candidates)
      rq.candidates.push_back({doc_id, row_vec(doc_id), grade > 0.0});
    queries.push_back(std::move(rq));
  }
  double map = map_reranking(queries);
  EvalReport report;
  report.rows.push_back({"map", map, std::nullopt});
  report.write_csv(out_path(out_name).string());
  std::cout << "map " << map << " over " << queries.size() << " queries\n";
  return 0;
}

int cmd_eval_sts(const std::string& ckpt_path, const std::string& vocab_path,
                 const std::string& pairs_path, std::uint64_t seed,
                 const std::string& out_name) {
  require_file(ckpt_path);
  require_file(vocab_path);
  require_file(pairs_path);
  auto pairs = read_sts_jsonl(pairs_path);
  write_manifest("eval-sts", seed, {ckpt_path, vocab_path, pairs_path},
                 json::object());
  EncoderModel model = load_checkpoint(ckpt_path);
  Vocabulary vocab = Vocabulary::load_tsv(vocab_path);
  require_vocab_match(model, vocab);
  std::vector<std::pair<double, double>> scored;
  for (const auto& pair : pairs) {
    Vec a = forward(model, vocab.encode(pair.text_a), 0, false).output;
    Vec b = forward(model, vocab.encode(pair.text_b), 0, false).output;
    scored.emplace_back(cosine_similarity(a, b), pair.score);
  }
  double rho = spearman_sts(scored);
  EvalReport report;
  report.rows.push_back({"spearman", rho, std::nullopt});
  report.write_csv(out_path(out_name).string());
  std::cout << "spearman " << rho << " over " << scored.size() << " pairs\n";
  return 0;
}

int cmd_probe_layers(const std::vector<std::string>& dump_paths,
                     const KnnConfig& knn, const std::string& out_name) {
  if (dump_paths.size() < 2) throw ConfigError("need at least 2 dumps");
  std::vector<LayerDump> dumps;
  std::vector<std::string> inputs;
  for (const auto& path : dump_paths) {
    DumpName name = parse_dump_name(path);
    std::string sidecar = path.substr(0, path.size() - 4) + ".jsonl";
    LayerDump dump;
    dump.layer = name.layer;
    dump.pooling = name.pooling;
    dump.set = load_embeddings(path, sidecar);
    dump.set = labeled_subset(dump.set);
    dumps.push_back(std::move(dump));
    inputs.push_back(path);
    inputs.push_back(sidecar);
  }
  bool same_pooling = true, same_layer = true;
  for (const auto& d : dumps) {
    same_pooling &= d.pooling == dumps.front().pooling;
    same_layer &= d.layer == dumps.front().layer;
  }
  if (!same_pooling && !same_layer)
    throw ConfigError("dumps must share a pooling (layer profile) or a layer "
                      "(pooling profile)");
  json cfg;
  cfg["k"] = knn.k;
  cfg["profile"] = same_pooling ? "layer" : "pooling";
  write_manifest("probe-layers", knn.seed, inputs, cfg);

  EvalReport report;
  if (same_pooling) {
    auto profile = layer_profile(std::move(dumps), knn);
    SvgSeries series{"knn_accuracy", {}};
    for (const auto& [layer, result] : profile) {
      report.rows.push_back({"layer" + std::to_string(layer), result.accuracy,
                             result.stderr_pct});
      series.points.emplace_back(static_cast<double>(layer), result.accuracy);
      std::cout << "layer " << layer << ": " << result.accuracy << '\n';
    }
    write_svg_line_chart(out_path("probe_layers.svg").string(),
                         "kNN accuracy by layer", "layer", "accuracy (%)",
                         {series});
  } else {
    auto profile = pooling_profile(std::move(dumps), knn);
    for (const auto& [pooling, result] : profile) {
      report.rows.push_back({pooling, result.accuracy, result.stderr_pct});
      std::cout << pooling << ": " << result.accuracy << '\n';
    }
  }
  report.write_csv(out_path(out_name).string());
  return 0;
}

int cmd_sweep(TrainFlags base, const std::string& param,
              const std::vector<double>& values, const std::string& out_name) {
  if (values.empty()) throw ConfigError("values must be non-empty");
  const std::vector<std::string> known = {"temperature", "t", "mask-fraction", "lr"};
  if (std::find(known.begin(), known.end(), param) == known.end())
    throw ConfigError("unknown sweep param: " + param +
                      " (expected temperature | t | mask-fraction | lr)");
  Corpus corpus = load_corpus_checked(base.corpus_path);
  json cfg = train_config_json(base);
  cfg["param"] = param;
  cfg["values"] = values;
  std::vector<std::string> inputs = {base.corpus_path};
  if (!base.vocab_path.empty()) inputs.push_back(base.vocab_path);
  write_manifest("sweep", base.seed, inputs, cfg);

  std::ofstream csv(out_path(out_name));
  if (!csv) throw std::runtime_error("cannot write sweep report");
  csv << "param,value,knn_accuracy,stderr\n";
  SvgSeries series{"knn_accuracy", {}};
  std::uint64_t root_seed = base.seed;
  for (std::size_t i = 0; i < values.size(); ++i) {
    TrainFlags f = base;
    if (param == "temperature") f.temperature = values[i];
    if (param == "t") f.crop_t = static_cast<std::size_t>(values[i]);
    if (param == "mask-fraction") {
      f.mode = "crop_mask";
      f.mask_fraction = values[i];
    }
    if (param == "lr") f.lr = values[i];
    validate_train_flags(f);
    f.seed = substream_seed(root_seed, "sweep/point" + std::to_string(i));
    f.eval_every = 0;
    TrainedRun run = run_training(f, corpus, nullptr, "");
    KnnConfig knn;
    knn.k = f.knn_k;
    knn.seed = substream_seed(f.seed, "cli/eval_split");
    KnnResult result =
        knn_accuracy(labeled_subset(embed_corpus(run.model, run.vocab, corpus)), knn);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", values[i]);
    csv << param << ',' << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.10g", result.accuracy);
    csv << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.10g", result.stderr_pct);
    csv << buf << '\n';
    series.points.emplace_back(values[i], result.accuracy);
    std::cout << param << "=" << values[i] << " knn_accuracy " << result.accuracy
              << '\n';
  }
  csv.close();
  write_svg_line_chart(out_path("sweep.svg").string(), "kNN accuracy vs " + param,
                       param, "accuracy (%)", {series});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embtool: contrastive text embeddings, from corpus to report"};
  app.set_version_flag("--version", std::string("embtool ") + kVersion);
  app.require_subcommand(1);
  const char* env_dir = std::getenv("EMB_OUT_DIR");
  out_dir_value = env_dir ? env_dir : ".";
  app.add_option("--out-dir", out_dir_value,
                 "output directory (or EMB_OUT_DIR; default .)");

  // build-vocab
  auto* bv = app.add_subcommand("build-vocab", "build a vocabulary TSV");
  std::string bv_corpus, bv_out = "vocab.tsv";
  std::size_t bv_max = 30000, bv_min = 1;
  std::uint64_t bv_seed = 0;
  bv->add_option("--corpus", bv_corpus, "corpus JSONL")->required();
  bv->add_option("--max-size", bv_max, "max vocabulary size incl. specials");
  bv->add_option("--min-freq", bv_min, "minimum token frequency");
  bv->add_option("--out", bv_out, "output TSV name");
  bv->add_option("--seed", bv_seed, "recorded in the manifest");

  // train
  auto* tr = app.add_subcommand("train", "train an embedding model");
  TrainFlags tf;
  add_train_flags(tr, tf);

  // embed
  auto* em = app.add_subcommand("embed", "embed a corpus with a checkpoint");
  std::string em_ckpt, em_vocab, em_corpus, em_out = "embeddings.emb";
  std::uint64_t em_seed = 0;
  em->add_option("--checkpoint", em_ckpt, "EMC1 checkpoint")->required();
  em->add_option("--vocab", em_vocab, "vocabulary TSV")->required();
  em->add_option("--corpus", em_corpus, "corpus JSONL")->required();
  em->add_option("--out", em_out, "output EMB1 name (sidecar: same stem .jsonl)");
  em->add_option("--seed", em_seed, "recorded in the manifest");

  // eval-knn
  auto* ek = app.add_subcommand("eval-knn", "kNN classification accuracy");
  std::string ek_emb, ek_labels, ek_metric = "euclidean", ek_post = "raw";
  std::string ek_out = "knn_report.csv";
  KnnConfig ek_cfg;
  ek->add_option("--emb", ek_emb, "EMB1 embeddings")->required();
  ek->add_option("--labels", ek_labels, "sidecar JSONL with labels")->required();
  ek->add_option("--k", ek_cfg.k, "neighbors");
  ek->add_option("--metric", ek_metric, "euclidean | cosine");
  ek->add_option("--post", ek_post, "raw | centered | whitened");
  ek->add_option("--split", ek_cfg.split, "train fraction");
  ek->add_option("--seed", ek_cfg.seed, "split seed");
  ek->add_option("--out", ek_out, "report CSV name");

  // eval-cluster
  auto* ec = app.add_subcommand("eval-cluster", "mini-batch k-means V-measure");
  std::string ec_emb, ec_labels, ec_out = "cluster_report.csv";
  std::size_t ec_clusters = 0, ec_batches = 1;
  std::uint64_t ec_seed = 0;
  ec->add_option("--emb", ec_emb, "EMB1 embeddings")->required();
  ec->add_option("--labels", ec_labels, "sidecar JSONL with labels")->required();
  ec->add_option("--clusters", ec_clusters, "number of clusters")->required();
  ec->add_option("--batches", ec_batches, "MTEB-style batch count");
  ec->add_option("--seed", ec_seed, "clustering seed");
  ec->add_option("--out", ec_out, "report CSV name");

  // eval-retrieval
  auto* er = app.add_subcommand("eval-retrieval", "NDCG@K over judged queries");
  std::string er_emb, er_ids, er_judgments, er_out = "retrieval_report.csv";
  std::size_t er_k = 10;
  std::uint64_t er_seed = 0;
  er->add_option("--emb", er_emb, "EMB1 embeddings")->required();
  er->add_option("--ids", er_ids, "sidecar JSONL with ids")->required();
  er->add_option("--judgments", er_judgments, "judgments JSONL")->required();
  er->add_option("--k", er_k, "cutoff");
  er->add_option("--seed", er_seed, "recorded in the manifest");
  er->add_option("--out", er_out, "report CSV name");

  // eval-rerank
  auto* err = app.add_subcommand("eval-rerank", "MAP over judged queries");
  std::string errk_emb, errk_ids, errk_judgments, errk_out = "rerank_report.csv";
  std::uint64_t errk_seed = 0;
  err->add_option("--emb", errk_emb, "EMB1 embeddings")->required();
  err->add_option("--ids", errk_ids, "sidecar JSONL with ids")->required();
  err->add_option("--judgments", errk_judgments, "judgments JSONL (rel > 0 = relevant)")
      ->required();
  err->add_option("--seed", errk_seed, "recorded in the manifest");
  err->add_option("--out", errk_out, "report CSV name");

  // eval-sts
  auto* es = app.add_subcommand("eval-sts", "Spearman vs human similarity scores");
  std::string es_ckpt, es_vocab, es_pairs, es_out = "sts_report.csv";
  std::uint64_t es_seed = 0;
  es->add_option("--checkpoint", es_ckpt, "EMC1 checkpoint")->required();
  es->add_option("--vocab", es_vocab, "vocabulary TSV")->required();
  es->add_option("--pairs", es_pairs, "STS pairs JSONL")->required();
  es->add_option("--seed", es_seed, "recorded in the manifest");
  es->add_option("--out", es_out, "report CSV name");

  // probe-layers
  auto* pl = app.add_subcommand("probe-layers", "kNN profile over embedding dumps");
  std::vector<std::string> pl_dumps;
  std::string pl_out = "probe_report.csv";
  KnnConfig pl_cfg;
  pl->add_option("--dumps", pl_dumps, "<model>.layer<l>.<pooling>.emb files")
      ->required()
      ->expected(-1);
  pl->add_option("--k", pl_cfg.k, "neighbors");
  pl->add_option("--seed", pl_cfg.seed, "split seed (shared across dumps)");
  pl->add_option("--out", pl_out, "report CSV name");

  // sweep
  auto* sw = app.add_subcommand("sweep", "hyperparameter grid, one run per value");
  TrainFlags swf;
  std::string sw_param, sw_out = "sweep_report.csv";
  std::vector<double> sw_values;
  add_train_flags(sw, swf);
  sw->add_option("--param", sw_param, "temperature | t | mask-fraction | lr")
      ->required();
  sw->add_option("--values", sw_values, "grid values")->required()->delimiter(',');
  sw->add_option("--out", sw_out, "report CSV name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "embtool: error: flags: " << e.what() << '\n';
    return 2;
  }

  try {
    std::filesystem::create_directories(out_dir_value);
    if (bv->parsed())
      return cmd_build_vocab(bv_corpus, bv_max, bv_min, bv_out, bv_seed);
    if (tr->parsed()) return cmd_train(tf);
    if (em->parsed())
      return cmd_embed(em_ckpt, em_vocab, em_corpus, em_out, em_seed);
    if (ek->parsed()) {
      ek_cfg.metric = parse_knn_metric(ek_metric);
      ek_cfg.post = parse_post_process(ek_post);
      return cmd_eval_knn(ek_emb, ek_labels, ek_cfg, ek_out);
    }
    if (ec->parsed())
      return cmd_eval_cluster(ec_emb, ec_labels, ec_clusters, ec_batches, ec_seed,
                              ec_out);
    if (er->parsed())
      return cmd_eval_retrieval(er_emb, er_ids, er_judgments, er_k, er_seed, er_out);
    if (err->parsed())
      return cmd_eval_rerank(errk_emb, errk_ids, errk_judgments, errk_seed, errk_out);
    if (es->parsed())
      return cmd_eval_sts(es_ckpt, es_vocab, es_pairs, es_seed, es_out);
    if (pl->parsed()) return cmd_probe_layers(pl_dumps, pl_cfg, pl_out);
    if (sw->parsed()) return cmd_sweep(swf, sw_param, sw_values, sw_out);
    std::cerr << "embtool: error: config: no command given\n";
    return 4;
  } catch (const MissingFileError& e) {
    std::cerr << "embtool: error: missing-file: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "embtool: error: config: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "embtool: error: config: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "embtool: error: runtime: " << e.what() << '\n';
    return 5;
  }
}
