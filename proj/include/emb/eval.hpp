#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emb/encoder.hpp"

namespace emb {

struct EmbeddingSet {
  std::vector<std::string> ids;
  std::optional<std::vector<int>> labels;  // dense class ids
  std::size_t n = 0, d = 0;
  std::vector<double> x;  // n x d, row-major

  const double* row(std::size_t i) const { return &x[i * d]; }
  void validate() const;
};

enum class KnnMetric { kEuclidean, kCosine };
enum class PostProcess { kRaw, kCentered, kWhitened };

KnnMetric parse_knn_metric(const std::string& name);
PostProcess parse_post_process(const std::string& name);

struct KnnConfig {
  std::size_t k = 10;
  KnnMetric metric = KnnMetric::kEuclidean;
  double split = 0.9;  // train fraction
  PostProcess post = PostProcess::kRaw;
  std::uint64_t seed = 0;
};

struct KnnResult {
  double accuracy = 0.0;  // percent
  double stderr_pct = 0.0;  // 100 * sqrt(p(1-p)/n_test)
  std::size_t n_test = 0;
};

// Seeded random split, majority vote among the k nearest train points.
// Vote ties break by smaller summed distance, then by lower class id.
// Post-processing is fit on the train split only.
KnnResult knn_accuracy(const EmbeddingSet& set, const KnnConfig& cfg);

// Subtract the mean of the fit rows from every row.
std::vector<double> center(const std::vector<double>& x, std::size_t n, std::size_t d,
                           const std::vector<std::size_t>& fit_rows);

// PCA whitening from the fit rows' covariance, eigenvalue floor eps.
std::vector<double> whiten(const std::vector<double>& x, std::size_t n, std::size_t d,
                           const std::vector<std::size_t>& fit_rows,
                           double eps = 1e-8);

struct MiniBatchKMeansConfig {
  std::size_t batch_size = 32;
  std::size_t iterations = 100;
  std::size_t restarts = 3;
};

// Assignments for the best-inertia restart; k-means++-style seeded init.
std::vector<int> mini_batch_kmeans(const EmbeddingSet& set, std::size_t n_clusters,
                                   const MiniBatchKMeansConfig& cfg,
                                   std::uint64_t seed);

// Harmonic mean of homogeneity and completeness (natural-log entropies).
double v_measure(const std::vector<int>& classes, const std::vector<int>& clusters);

double vmeasure_clustering(const EmbeddingSet& set, std::size_t n_clusters,
                           const MiniBatchKMeansConfig& cfg, std::uint64_t seed);

// MTEB-style protocol: cluster non-overlapping batches separately and
// average the scores.
double vmeasure_clustering_batched(const EmbeddingSet& set, std::size_t n_clusters,
                                   std::size_t n_batches,
                                   const MiniBatchKMeansConfig& cfg,
                                   std::uint64_t seed);

// nullopt when the query has no relevant document (IDCG = 0).
std::optional<double> ndcg_at_k(const std::vector<std::string>& ranking,
                                const std::map<std::string, double>& judgments,
                                std::size_t k = 10);

struct NdcgSummary {
  double mean = 0.0;
  std::size_t n_scored = 0;
  std::size_t n_excluded = 0;  // queries with zero relevant docs
};

struct RankedQuery {
  std::string query_id;
  std::vector<std::string> ranking;            // doc ids, best first
  std::map<std::string, double> judgments;     // doc id -> relevance grade
};

NdcgSummary mean_ndcg_at_k(const std::vector<RankedQuery>& queries, std::size_t k = 10);

struct RerankCandidate {
  std::string id;
  Vec embedding;
  bool relevant = false;
};

struct RerankQuery {
  std::string query_id;
  Vec query_embedding;
  std::vector<RerankCandidate> candidates;
};

// Candidates ranked by descending cosine similarity to the query (ties by
// doc id); AP = sum_k P(k)*rel(k) / n_relevant; MAP over all queries.
double average_precision(const RerankQuery& query);
double map_reranking(const std::vector<RerankQuery>& queries);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);
double spearman_sts(const std::vector<std::pair<double, double>>& pairs);

struct EvalReport {
  struct Row {
    std::string metric;
    double value = 0.0;
    std::optional<double> stderr_value;
  };
  std::vector<Row> rows;
  void write_csv(const std::string& path) const;
};

}  // namespace emb
