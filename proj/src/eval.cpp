#include "emb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include <Eigen/Dense>

#include "emb/objective.hpp"
#include "emb/rng.hpp"

namespace emb {

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

double row_norm(const double* a, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

double row_dot(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

double entropy(const std::vector<double>& counts, double total) {
  double h = 0.0;
  for (double c : counts)
    if (c > 0.0) h -= (c / total) * std::log(c / total);
  return h;
}

}  // namespace

void EmbeddingSet::validate() const {
  if (ids.size() != n) throw std::runtime_error("EmbeddingSet: ids/n mismatch");
  if (x.size() != n * d) throw std::runtime_error("EmbeddingSet: matrix shape mismatch");
  if (labels && labels->size() != n)
    throw std::runtime_error("EmbeddingSet: labels/n mismatch");
  std::unordered_set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second)
      throw std::runtime_error("EmbeddingSet: duplicate id \"" + id + "\"");
  for (double v : x)
    if (!std::isfinite(v)) throw std::runtime_error("EmbeddingSet: non-finite entry");
}

KnnMetric parse_knn_metric(const std::string& name) {
  if (name == "euclidean") return KnnMetric::kEuclidean;
  if (name == "cosine") return KnnMetric::kCosine;
  throw std::invalid_argument("unknown knn metric: " + name);
}

PostProcess parse_post_process(const std::string& name) {
  if (name == "raw") return PostProcess::kRaw;
  if (name == "centered") return PostProcess::kCentered;
  if (name == "whitened") return PostProcess::kWhitened;
  throw std::invalid_argument("unknown post-processing: " + name);
}

std::vector<double> center(const std::vector<double>& x, std::size_t n, std::size_t d,
                           const std::vector<std::size_t>& fit_rows) {
  if (fit_rows.size() < 2)
    throw std::invalid_argument("center: need at least 2 fit rows");
  std::vector<double> mean(d, 0.0);
  for (std::size_t r : fit_rows)
    for (std::size_t c = 0; c < d; ++c) mean[c] += x[r * d + c];
  for (auto& m : mean) m /= static_cast<double>(fit_rows.size());
  std::vector<double> out(x);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] -= mean[c];
  return out;
}

std::vector<double> whiten(const std::vector<double>& x, std::size_t n, std::size_t d,
                           const std::vector<std::size_t>& fit_rows, double eps) {
  if (fit_rows.size() < 2)
    throw std::invalid_argument("whiten: need at least 2 fit rows");
  const double n_fit = static_cast<double>(fit_rows.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t r : fit_rows)
    mean += Eigen::Map<const Eigen::VectorXd>(&x[r * d], static_cast<Eigen::Index>(d));
  mean /= n_fit;

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                              static_cast<Eigen::Index>(d));
  for (std::size_t r : fit_rows) {
    Eigen::VectorXd centered =
        Eigen::Map<const Eigen::VectorXd>(&x[r * d], static_cast<Eigen::Index>(d)) - mean;
    cov += centered * centered.transpose();
  }
  cov /= n_fit;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("whiten: eigendecomposition failed");
  Eigen::VectorXd inv_sqrt = solver.eigenvalues().cwiseMax(eps).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd transform = solver.eigenvectors() * inv_sqrt.asDiagonal();

  std::vector<double> out(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    Eigen::VectorXd row =
        (Eigen::Map<const Eigen::VectorXd>(&x[r * d], static_cast<Eigen::Index>(d)) - mean)
            .transpose() *
        transform;
    Eigen::Map<Eigen::VectorXd>(&out[r * d], static_cast<Eigen::Index>(d)) = row;
  }
  return out;
}

KnnResult knn_accuracy(const EmbeddingSet& set, const KnnConfig& cfg) {
  if (!set.labels) throw std::runtime_error("knn_accuracy: labels required");
  if (cfg.split <= 0.0 || cfg.split >= 1.0)
    throw std::invalid_argument("knn_accuracy: split must be in (0,1)");
  const std::size_t n = set.n;
  const std::size_t d = set.d;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = substream(cfg.seed, "eval/knn_split");
  rng.shuffle(order);
  auto n_train = static_cast<std::size_t>(cfg.split * static_cast<double>(n) + 1e-9);
  if (n_train == 0 || n_train >= n)
    throw std::runtime_error("knn_accuracy: degenerate split");
  if (cfg.k >= n_train)
    throw std::runtime_error("knn_accuracy: k=" + std::to_string(cfg.k) +
                             " must be < n_train=" + std::to_string(n_train));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<long>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<long>(n_train), order.end());

  const auto& labels = *set.labels;
  int n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  {
    std::vector<bool> covered(static_cast<std::size_t>(n_classes), false);
    std::unordered_set<int> present(labels.begin(), labels.end());
    for (std::size_t r : train) covered[static_cast<std::size_t>(labels[r])] = true;
    for (int c : present)
      if (!covered[static_cast<std::size_t>(c)])
        throw std::runtime_error("knn_accuracy: class " + std::to_string(c) +
                                 " has no train point after split");
  }

  std::vector<double> x = set.x;
  if (cfg.post == PostProcess::kCentered) x = center(x, n, d, train);
  else if (cfg.post == PostProcess::kWhitened) x = whiten(x, n, d, train);

  std::vector<double> norms;
  if (cfg.metric == KnnMetric::kCosine) {
    norms.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      norms[i] = row_norm(&x[i * d], d);
      if (norms[i] == 0.0)
        throw std::runtime_error("knn_accuracy: zero-norm row under cosine metric");
    }
  }

  std::size_t correct = 0;
  std::vector<std::pair<double, std::size_t>> dists(train.size());
  for (std::size_t q : test) {
    for (std::size_t ti = 0; ti < train.size(); ++ti) {
      std::size_t r = train[ti];
      double dist;
      if (cfg.metric == KnnMetric::kEuclidean) {
        dist = std::sqrt(sq_dist(&x[q * d], &x[r * d], d));
      } else {
        dist = 1.0 - row_dot(&x[q * d], &x[r * d], d) / (norms[q] * norms[r]);
      }
      dists[ti] = {dist, r};
    }
    std::partial_sort(dists.begin(), dists.begin() + static_cast<long>(cfg.k), dists.end());
    std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
    std::vector<double> dist_sum(static_cast<std::size_t>(n_classes), 0.0);
    for (std::size_t i = 0; i < cfg.k; ++i) {
      auto cls = static_cast<std::size_t>(labels[dists[i].second]);
      votes[cls] += 1;
      dist_sum[cls] += dists[i].first;
    }
    int best = -1;
    for (int c = 0; c < n_classes; ++c) {
      auto cu = static_cast<std::size_t>(c);
      if (votes[cu] == 0) continue;
      if (best < 0) { best = c; continue; }
      auto bu = static_cast<std::size_t>(best);
      if (votes[cu] > votes[bu] ||
          (votes[cu] == votes[bu] && dist_sum[cu] < dist_sum[bu]))
        best = c;
      // equal votes and equal summed distance: lower class id already wins
    }
    if (best == labels[q]) ++correct;
  }

  KnnResult result;
  result.n_test = test.size();
  double p = static_cast<double>(correct) / static_cast<double>(test.size());
  result.accuracy = 100.0 * p;
  result.stderr_pct = 100.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(test.size()));
  return result;
}

std::vector<int> mini_batch_kmeans(const EmbeddingSet& set, std::size_t n_clusters,
                                   const MiniBatchKMeansConfig& cfg,
                                   std::uint64_t seed) {
  const std::size_t n = set.n, d = set.d;
  if (n_clusters < 2) throw std::invalid_argument("mini_batch_kmeans: need K >= 2");
  if (n_clusters > n) throw std::invalid_argument("mini_batch_kmeans: K > n points");

  auto nearest_center = [&](const std::vector<double>& centers, const double* p) {
    std::size_t best = 0;
    double best_dist = sq_dist(p, &centers[0], d);
    for (std::size_t c = 1; c < n_clusters; ++c) {
      double dist = sq_dist(p, &centers[c * d], d);
      if (dist < best_dist) { best_dist = dist; best = c; }
    }
    return std::make_pair(best, best_dist);
  };

  std::vector<int> best_assign;
  double best_inertia = std::numeric_limits<double>::infinity();

  for (std::size_t restart = 0; restart < cfg.restarts; ++restart) {
    Rng rng = substream(seed, "eval/mbk/restart" + std::to_string(restart));
    // k-means++ style init
    std::vector<double> centers(n_clusters * d);
    std::size_t first = rng.uniform_index(n);
    std::copy_n(set.row(first), d, centers.begin());
    std::vector<double> min_dist(n);
    for (std::size_t i = 0; i < n; ++i) min_dist[i] = sq_dist(set.row(i), &centers[0], d);
    for (std::size_t c = 1; c < n_clusters; ++c) {
      double total = std::accumulate(min_dist.begin(), min_dist.end(), 0.0);
      std::size_t pick;
      if (total <= 0.0) {
        pick = rng.uniform_index(n);
      } else {
        double target = rng.uniform01() * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += min_dist[i];
          if (acc >= target) { pick = i; break; }
        }
      }
      std::copy_n(set.row(pick), d, centers.begin() + static_cast<long>(c * d));
      for (std::size_t i = 0; i < n; ++i)
        min_dist[i] = std::min(min_dist[i], sq_dist(set.row(i), &centers[c * d], d));
    }

    std::vector<std::size_t> counts(n_clusters, 0);
    std::size_t batch = std::min(cfg.batch_size, n);
    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
      auto sample = rng.sample_without_replacement(n, batch);
      for (std::size_t i : sample) {
        auto [c, dist] = nearest_center(centers, set.row(i));
        counts[c] += 1;
        double lr = 1.0 / static_cast<double>(counts[c]);
        double* ctr = &centers[c * d];
        const double* p = set.row(i);
        for (std::size_t j = 0; j < d; ++j) ctr[j] += lr * (p[j] - ctr[j]);
      }
    }

    // full assignment; re-seed emptied clusters from the farthest point
    std::vector<int> assign(n);
    for (bool changed = true; changed;) {
      changed = false;
      std::vector<std::size_t> sizes(n_clusters, 0);
      std::vector<double> dist_to_center(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto [c, dist] = nearest_center(centers, set.row(i));
        assign[i] = static_cast<int>(c);
        dist_to_center[i] = dist;
        sizes[c] += 1;
      }
      for (std::size_t c = 0; c < n_clusters; ++c) {
        if (sizes[c] != 0) continue;
        std::size_t farthest =
            static_cast<std::size_t>(std::max_element(dist_to_center.begin(),
                                                      dist_to_center.end()) -
                                     dist_to_center.begin());
        std::copy_n(set.row(farthest), d, centers.begin() + static_cast<long>(c * d));
        changed = true;
        break;
      }
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      inertia += sq_dist(set.row(i), &centers[static_cast<std::size_t>(assign[i]) * d], d);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = std::move(assign);
    }
  }
  return best_assign;
}

double v_measure(const std::vector<int>& classes, const std::vector<int>& clusters) {
  if (classes.size() != clusters.size() || classes.empty())
    throw std::invalid_argument("v_measure: label/cluster size mismatch");
  int n_classes = *std::max_element(classes.begin(), classes.end()) + 1;
  int n_clusters = *std::max_element(clusters.begin(), clusters.end()) + 1;
  auto nc = static_cast<std::size_t>(n_classes);
  auto nk = static_cast<std::size_t>(n_clusters);
  std::vector<double> table(nc * nk, 0.0);
  std::vector<double> class_totals(nc, 0.0), cluster_totals(nk, 0.0);
  double total = static_cast<double>(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    auto c = static_cast<std::size_t>(classes[i]);
    auto k = static_cast<std::size_t>(clusters[i]);
    table[c * nk + k] += 1.0;
    class_totals[c] += 1.0;
    cluster_totals[k] += 1.0;
  }
  double h_c = entropy(class_totals, total);
  double h_k = entropy(cluster_totals, total);
  double h_c_given_k = 0.0, h_k_given_c = 0.0;
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t k = 0; k < nk; ++k) {
      double nck = table[c * nk + k];
      if (nck == 0.0) continue;
      h_c_given_k -= (nck / total) * std::log(nck / cluster_totals[k]);
      h_k_given_c -= (nck / total) * std::log(nck / class_totals[c]);
    }
  double homogeneity = h_c == 0.0 ? 1.0 : 1.0 - h_c_given_k / h_c;
  double completeness = h_k == 0.0 ? 1.0 : 1.0 - h_k_given_c / h_k;
  if (homogeneity + completeness == 0.0) return 0.0;
  return 2.0 * homogeneity * completeness / (homogeneity + completeness);
}

double vmeasure_clustering(const EmbeddingSet& set, std::size_t n_clusters,
                           const MiniBatchKMeansConfig& cfg, std::uint64_t seed) {
  if (!set.labels) throw std::runtime_error("vmeasure_clustering: labels required");
  auto assign = mini_batch_kmeans(set, n_clusters, cfg, seed);
  return v_measure(*set.labels, assign);
}

double vmeasure_clustering_batched(const EmbeddingSet& set, std::size_t n_clusters,
                                   std::size_t n_batches,
                                   const MiniBatchKMeansConfig& cfg,
                                   std::uint64_t seed) {
  if (n_batches < 1) throw std::invalid_argument("vmeasure: n_batches must be >= 1");
  if (!set.labels) throw std::runtime_error("vmeasure_clustering: labels required");
  std::vector<std::size_t> order(set.n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = substream(seed, "eval/vmeasure_batches");
  rng.shuffle(order);
  double sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    std::size_t lo = b * set.n / n_batches;
    std::size_t hi = (b + 1) * set.n / n_batches;
    if (hi - lo < n_clusters) continue;  // batch too small to cluster
    EmbeddingSet sub;
    sub.n = hi - lo;
    sub.d = set.d;
    sub.labels = std::vector<int>();
    sub.x.reserve(sub.n * sub.d);
    for (std::size_t i = lo; i < hi; ++i) {
      std::size_t r = order[i];
      sub.ids.push_back(set.ids[r]);
      sub.labels->push_back((*set.labels)[r]);
      sub.x.insert(sub.x.end(), set.row(r), set.row(r) + set.d);
    }
    sum += vmeasure_clustering(sub, n_clusters, cfg,
                               substream_seed(seed, "batch" + std::to_string(b)));
    ++scored;
  }
  if (scored == 0) throw std::runtime_error("vmeasure: all batches too small");
  return sum / static_cast<double>(scored);
}

std::optional<double> ndcg_at_k(const std::vector<std::string>& ranking,
                                const std::map<std::string, double>& judgments,
                                std::size_t k) {
  if (k < 1) throw std::invalid_argument("ndcg_at_k: K must be >= 1");
  std::vector<double> rels;
  rels.reserve(judgments.size());
  for (const auto& [id, rel] : judgments) rels.push_back(rel);
  std::sort(rels.begin(), rels.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, rels.size()); ++i)
    idcg += rels[i] / std::log2(static_cast<double>(i + 2));
  if (idcg == 0.0) return std::nullopt;
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
    auto it = judgments.find(ranking[i]);
    if (it != judgments.end())
      dcg += it->second / std::log2(static_cast<double>(i + 2));
  }
  return dcg / idcg;
}

NdcgSummary mean_ndcg_at_k(const std::vector<RankedQuery>& queries, std::size_t k) {
  NdcgSummary summary;
  double sum = 0.0;
  for (const auto& q : queries) {
    auto v = ndcg_at_k(q.ranking, q.judgments, k);
    if (!v) { summary.n_excluded += 1; continue; }
    sum += *v;
    summary.n_scored += 1;
  }
  if (summary.n_scored > 0) summary.mean = sum / static_cast<double>(summary.n_scored);
  return summary;
}

double average_precision(const RerankQuery& query) {
  std::size_t n_relevant = 0;
  for (const auto& c : query.candidates)
    if (c.relevant) ++n_relevant;
  if (n_relevant == 0)
    throw std::runtime_error("average_precision: query \"" + query.query_id +
                             "\" has no relevant candidate");
  std::vector<std::pair<double, const RerankCandidate*>> ranked;
  ranked.reserve(query.candidates.size());
  for (const auto& c : query.candidates)
    ranked.emplace_back(cosine_similarity(query.query_embedding, c.embedding), &c);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->id < b.second->id;
  });
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
    if (!ranked[rank].second->relevant) continue;
    ++hits;
    ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  return ap / static_cast<double>(n_relevant);
}

double map_reranking(const std::vector<RerankQuery>& queries) {
  if (queries.empty()) throw std::invalid_argument("map_reranking: no queries");
  double sum = 0.0;
  for (const auto& q : queries) sum += average_precision(q);
  return sum / static_cast<double>(queries.size());
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: size mismatch");
  if (a.size() < 3) throw std::invalid_argument("spearman: need at least 3 pairs");
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  double n = static_cast<double>(a.size());
  double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double da = ra[i] - ma, db = rb[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0)
    throw std::runtime_error("spearman: undefined correlation (zero rank variance)");
  return cov / std::sqrt(va * vb);
}

double spearman_sts(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> a, b;
  a.reserve(pairs.size());
  b.reserve(pairs.size());
  for (const auto& [cosine, score] : pairs) {
    a.push_back(cosine);
    b.push_back(score);
  }
  return spearman(a, b);
}

void EvalReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << "metric,value,stderr\n";
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.10g", row.value);
    out << row.metric << ',' << buf << ',';
    if (row.stderr_value) {
      std::snprintf(buf, sizeof(buf), "%.10g", *row.stderr_value);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace emb
