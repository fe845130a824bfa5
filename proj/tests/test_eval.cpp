#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "emb/embio.hpp"
#include "emb/eval.hpp"
#include "emb/rng.hpp"
#include "support/oracles.hpp"

using namespace emb;

namespace {

EmbeddingSet gaussian_clusters(std::size_t n_per_class, std::size_t n_classes,
                               std::size_t d, double separation, std::uint64_t seed) {
  EmbeddingSet set;
  set.d = d;
  set.labels = std::vector<int>();
  Rng rng(seed);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      set.ids.push_back("p" + std::to_string(c) + "_" + std::to_string(i));
      set.labels->push_back(static_cast<int>(c));
      for (std::size_t j = 0; j < d; ++j) {
        double mean = (j == c % d) ? separation * static_cast<double>(c + 1) : 0.0;
        set.x.push_back(mean + rng.gaussian());
      }
      ++set.n;
    }
  }
  return set;
}

}  // namespace

TEST_CASE("knn: well-separated clusters reach 100%") {
  auto set = gaussian_clusters(100, 2, 2, 30.0, 1);
  KnnConfig cfg;
  auto result = knn_accuracy(set, cfg);
  CHECK(result.accuracy == doctest::Approx(100.0));
  CHECK(result.stderr_pct == doctest::Approx(0.0));
  CHECK(result.n_test == 20);
}

TEST_CASE("knn: random labels sit at chance level") {
  EmbeddingSet set;
  set.d = 5;
  set.labels = std::vector<int>();
  Rng rng(2);
  for (std::size_t i = 0; i < 2000; ++i) {
    set.ids.push_back("p" + std::to_string(i));
    set.labels->push_back(static_cast<int>(rng.uniform_index(5)));
    for (std::size_t j = 0; j < 5; ++j) set.x.push_back(rng.gaussian());
    ++set.n;
  }
  auto result = knn_accuracy(set, {});
  CHECK(result.accuracy > 17.0);
  CHECK(result.accuracy < 23.0);
  // binomial stderr around p = 0.2, n_test = 200
  CHECK(result.stderr_pct == doctest::Approx(100.0 * std::sqrt(0.2 * 0.8 / 200.0)).epsilon(0.3));
}

TEST_CASE("knn: euclidean equals cosine on unit-normalized data") {
  auto set = gaussian_clusters(60, 3, 4, 2.0, 3);
  for (std::size_t i = 0; i < set.n; ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < set.d; ++j) norm += set.x[i * set.d + j] * set.x[i * set.d + j];
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < set.d; ++j) set.x[i * set.d + j] /= norm;
  }
  KnnConfig cfg;
  cfg.k = 5;
  auto euclid = knn_accuracy(set, cfg);
  cfg.metric = KnnMetric::kCosine;
  auto cosine = knn_accuracy(set, cfg);
  CHECK(euclid.accuracy == cosine.accuracy);
}

TEST_CASE("knn: invariant to rotation and translation under euclidean") {
  auto set = gaussian_clusters(50, 3, 4, 2.0, 4);
  KnnConfig cfg;
  cfg.k = 7;
  auto base = knn_accuracy(set, cfg);

  // rotate in the (0,1) and (2,3) planes, then translate
  auto rotated = set;
  double c01 = std::cos(0.7), s01 = std::sin(0.7);
  double c23 = std::cos(-1.2), s23 = std::sin(-1.2);
  for (std::size_t i = 0; i < set.n; ++i) {
    double* r = &rotated.x[i * 4];
    double a = r[0] * c01 - r[1] * s01, b = r[0] * s01 + r[1] * c01;
    double c = r[2] * c23 - r[3] * s23, d2 = r[2] * s23 + r[3] * c23;
    r[0] = a + 5.0; r[1] = b - 3.0; r[2] = c + 100.0; r[3] = d2;
  }
  auto after = knn_accuracy(rotated, cfg);
  CHECK(after.accuracy == base.accuracy);
}

TEST_CASE("knn matches the exhaustive oracle on random instances") {
  Rng rng(9);
  for (int trial = 0; trial < 25; ++trial) {
    EmbeddingSet set;
    set.d = 1 + rng.uniform_index(4);
    set.n = 30 + rng.uniform_index(21);
    set.labels = std::vector<int>();
    for (std::size_t i = 0; i < set.n; ++i) {
      set.ids.push_back("r" + std::to_string(i));
      set.labels->push_back(static_cast<int>(rng.uniform_index(3)));
      for (std::size_t j = 0; j < set.d; ++j) set.x.push_back(rng.gaussian());
    }
    KnnConfig cfg;
    cfg.k = 1 + rng.uniform_index(8);
    cfg.metric = rng.bernoulli(0.5) ? KnnMetric::kEuclidean : KnnMetric::kCosine;
    cfg.seed = rng.next_u64();
    double got;
    try {
      got = knn_accuracy(set, cfg).accuracy;
    } catch (const std::runtime_error&) {
      continue;  // a class missed the train split; oracle contract does not apply
    }
    CHECK(got == doctest::Approx(oracles::knn_accuracy_percent(set, cfg)).epsilon(1e-12));
  }
}

TEST_CASE("knn errors") {
  auto set = gaussian_clusters(5, 2, 2, 10.0, 5);
  KnnConfig cfg;
  cfg.k = 10;  // n_train = 9
  CHECK_THROWS_WITH_AS(knn_accuracy(set, cfg), doctest::Contains("n_train"),
                       std::runtime_error);
  set.labels.reset();
  cfg.k = 3;
  CHECK_THROWS_WITH_AS(knn_accuracy(set, cfg), doctest::Contains("labels"),
                       std::runtime_error);
}

TEST_CASE("center makes fit-row means zero") {
  Rng rng(6);
  std::size_t n = 20, d = 3;
  std::vector<double> x(n * d);
  for (auto& v : x) v = rng.gaussian() + 4.0;
  std::vector<std::size_t> fit = {0, 1, 2, 5, 8, 13};
  auto centered = center(x, n, d, fit);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r : fit) mean += centered[r * d + c];
    CHECK(std::abs(mean / static_cast<double>(fit.size())) < 1e-12);
  }
}

TEST_CASE("whiten produces identity covariance on the fit rows") {
  Rng rng(7);
  std::size_t n = 200, d = 4;
  std::vector<double> x(n * d);
  // correlated, anisotropic data
  for (std::size_t i = 0; i < n; ++i) {
    double base = rng.gaussian();
    x[i * d + 0] = 3.0 * base + rng.gaussian();
    x[i * d + 1] = base + 0.1 * rng.gaussian() + 5.0;
    x[i * d + 2] = rng.gaussian() * 0.5;
    x[i * d + 3] = x[i * d + 0] * 0.2 + rng.gaussian();
  }
  std::vector<std::size_t> fit(150);
  std::iota(fit.begin(), fit.end(), 0);
  auto w = whiten(x, n, d, fit);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      double mean_a = 0.0, mean_b = 0.0;
      for (std::size_t r : fit) { mean_a += w[r * d + a]; mean_b += w[r * d + b]; }
      mean_a /= 150.0; mean_b /= 150.0;
      double cov = 0.0;
      for (std::size_t r : fit)
        cov += (w[r * d + a] - mean_a) * (w[r * d + b] - mean_b);
      cov /= 150.0;
      CHECK(std::abs(cov - (a == b ? 1.0 : 0.0)) < 1e-6);
    }

  SUBCASE("whitening twice keeps the covariance identity") {
    auto ww = whiten(w, n, d, fit);
    for (std::size_t a = 0; a < d; ++a) {
      double mean = 0.0;
      for (std::size_t r : fit) mean += ww[r * d + a];
      mean /= 150.0;
      double var = 0.0;
      for (std::size_t r : fit) var += (ww[r * d + a] - mean) * (ww[r * d + a] - mean);
      CHECK(std::abs(var / 150.0 - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("whiten 1D of {-1,1} is unchanged") {
  std::vector<double> x = {-1.0, 1.0};
  auto w = whiten(x, 2, 1, {0, 1});
  // unit variance, zero mean already; sign of the eigenvector may flip
  CHECK(std::abs(std::abs(w[0]) - 1.0) < 1e-9);
  CHECK(w[0] == doctest::Approx(-w[1]));
}

TEST_CASE("v_measure") {
  SUBCASE("perfect agreement") {
    CHECK(v_measure({0, 0, 1, 1, 2}, {2, 2, 0, 0, 1}) == doctest::Approx(1.0));
  }
  SUBCASE("single cluster over balanced classes is 0") {
    CHECK(v_measure({0, 0, 1, 1}, {0, 0, 0, 0}) == doctest::Approx(0.0));
  }
  SUBCASE("contingency [[5,0],[0,3],[2,0]] matches the entropy oracle") {
    std::vector<int> classes, clusters;
    auto add = [&](int cls, int clu, int count) {
      for (int i = 0; i < count; ++i) { classes.push_back(cls); clusters.push_back(clu); }
    };
    add(0, 0, 5); add(1, 1, 3); add(2, 0, 2);
    CHECK(v_measure(classes, clusters) ==
          doctest::Approx(oracles::v_measure(classes, clusters)).epsilon(1e-9));
  }
  SUBCASE("invariant to cluster id permutation") {
    std::vector<int> classes = {0, 0, 1, 1, 2, 2, 0, 1};
    std::vector<int> clusters = {0, 1, 1, 2, 2, 0, 0, 1};
    std::vector<int> permuted;  // 0->2, 1->0, 2->1
    for (int c : clusters) permuted.push_back((c + 2) % 3);
    CHECK(v_measure(classes, clusters) == doctest::Approx(v_measure(classes, permuted)));
  }
}

TEST_CASE("mini-batch kmeans recovers separated clusters") {
  auto set = gaussian_clusters(80, 3, 3, 25.0, 8);
  double v = vmeasure_clustering(set, 3, {}, 42);
  CHECK(v == doctest::Approx(1.0));

  SUBCASE("batch-averaged protocol also scores high") {
    CHECK(vmeasure_clustering_batched(set, 3, 4, {}, 42) > 0.95);
  }
  SUBCASE("determinism") {
    CHECK(vmeasure_clustering(set, 3, {}, 42) == v);
  }
}

TEST_CASE("ndcg") {
  std::map<std::string, double> judgments = {{"a", 1.0}, {"b", 0.0}};
  SUBCASE("ideal ordering is 1") {
    CHECK(*ndcg_at_k({"a", "b"}, judgments, 2) == doctest::Approx(1.0));
  }
  SUBCASE("relevant at rank 2") {
    CHECK(*ndcg_at_k({"b", "a"}, judgments, 2) ==
          doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-9));
  }
  SUBCASE("all irrelevant -> excluded") {
    CHECK(!ndcg_at_k({"b"}, {{"b", 0.0}}, 2).has_value());
    NdcgSummary summary = mean_ndcg_at_k(
        {{"q1", {"a", "b"}, judgments}, {"q2", {"b"}, {{"b", 0.0}}}}, 2);
    CHECK(summary.n_scored == 1);
    CHECK(summary.n_excluded == 1);
    CHECK(summary.mean == doctest::Approx(1.0));
  }
  SUBCASE("graded relevance matches the oracle") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
      std::map<std::string, double> j;
      std::vector<std::string> ranking;
      std::size_t n = 1 + rng.uniform_index(12);
      for (std::size_t i = 0; i < n; ++i) {
        std::string id = "d" + std::to_string(i);
        j[id] = static_cast<double>(rng.uniform_index(4));
        ranking.push_back(id);
      }
      rng.shuffle(ranking);
      std::size_t k = 1 + rng.uniform_index(10);
      bool defined = false;
      double expected = oracles::ndcg(ranking, j, k, &defined);
      auto got = ndcg_at_k(ranking, j, k);
      CHECK(got.has_value() == defined);
      if (defined) CHECK(*got == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("map reranking") {
  auto make_query = [](std::vector<std::pair<Vec, bool>> cands, Vec q) {
    RerankQuery query;
    query.query_id = "q";
    query.query_embedding = std::move(q);
    int i = 0;
    for (auto& [e, rel] : cands)
      query.candidates.push_back({"c" + std::to_string(i++), e, rel});
    return query;
  };
  SUBCASE("single relevant ranked first -> AP 1") {
    auto q = make_query({{{1, 0}, true}, {{0, 1}, false}}, {1, 0});
    CHECK(average_precision(q) == doctest::Approx(1.0));
  }
  SUBCASE("relevant ranked second of two -> AP 0.5") {
    auto q = make_query({{{1, 0}, false}, {{0, 1}, true}}, {1, 0});
    CHECK(average_precision(q) == doctest::Approx(0.5));
  }
  SUBCASE("relevant at ranks 1 and 3 -> AP (1 + 2/3)/2") {
    auto q = make_query({{{1, 0}, true}, {{0.5, 0.6}, false}, {{0, 1}, true}}, {1, 0});
    CHECK(average_precision(q) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-9));
  }
  SUBCASE("zero relevant candidates names the query") {
    auto q = make_query({{{1, 0}, false}}, {1, 0});
    q.query_id = "broken_query";
    CHECK_THROWS_WITH_AS(average_precision(q), doctest::Contains("broken_query"),
                         std::runtime_error);
  }
  SUBCASE("MAP averages over queries") {
    auto q1 = make_query({{{1, 0}, true}, {{0, 1}, false}}, {1, 0});
    auto q2 = make_query({{{1, 0}, false}, {{0, 1}, true}}, {1, 0});
    CHECK(map_reranking({q1, q2}) == doctest::Approx(0.75));
  }
}

TEST_CASE("spearman") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {40, 30, 20, 10}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3}, {1, 3, 2}) == doctest::Approx(0.5));
  CHECK_THROWS_WITH_AS(spearman({1, 1, 1}, {1, 2, 3}), doctest::Contains("undefined"),
                       std::runtime_error);
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2}), std::invalid_argument);

  SUBCASE("invariant to strictly monotone transforms") {
    Rng rng(13);
    std::vector<double> a(12), b(12);
    for (auto& v : a) v = rng.gaussian();
    for (auto& v : b) v = rng.gaussian();
    double base = spearman(a, b);
    std::vector<double> ta, tb;
    for (double v : a) ta.push_back(std::exp(v));
    for (double v : b) tb.push_back(v * v * v + 2.0 * v);
    CHECK(spearman(ta, tb) == doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("average ranks for ties match the counting oracle") {
    Rng rng(14);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> a(10), b(10);
      for (auto& v : a) v = static_cast<double>(rng.uniform_index(5));
      for (auto& v : b) v = static_cast<double>(rng.uniform_index(5));
      try {
        double got = spearman(a, b);
        CHECK(got == doctest::Approx(oracles::spearman(a, b)).epsilon(1e-9));
      } catch (const std::runtime_error&) {
        // zero variance draw; nothing to compare
      }
    }
  }
}

TEST_CASE("EMB1 round trip with sidecar") {
  auto set = gaussian_clusters(10, 2, 3, 5.0, 20);
  auto dir = std::filesystem::temp_directory_path();
  auto emb_path = (dir / "eval_test.emb").string();
  auto sidecar_path = (dir / "eval_test.jsonl").string();
  write_emb1(set, emb_path);
  write_sidecar(set, {"first", "second"}, sidecar_path);
  auto loaded = read_emb1(emb_path);
  auto names = read_sidecar(sidecar_path, loaded);
  CHECK(loaded.n == set.n);
  CHECK(loaded.d == set.d);
  CHECK(loaded.ids == set.ids);
  CHECK(names == std::vector<std::string>{"first", "second"});
  REQUIRE(loaded.labels.has_value());
  CHECK(*loaded.labels == *set.labels);
  for (std::size_t i = 0; i < set.x.size(); ++i)
    CHECK(loaded.x[i] == static_cast<double>(static_cast<float>(set.x[i])));
  std::remove(emb_path.c_str());
  std::remove(sidecar_path.c_str());
}

TEST_CASE("report CSV format") {
  EvalReport report;
  report.rows.push_back({"knn_accuracy", 91.25, 1.5});
  report.rows.push_back({"v_measure", 0.82, std::nullopt});
  auto path = (std::filesystem::temp_directory_path() / "report_test.csv").string();
  report.write_csv(path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "metric,value,stderr");
  std::getline(in, line);
  CHECK(line == "knn_accuracy,91.25,1.5");
  std::getline(in, line);
  CHECK(line == "v_measure,0.82,");
  std::remove(path.c_str());
}
