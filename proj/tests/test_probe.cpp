#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emb/probe.hpp"
#include "emb/rng.hpp"

using namespace emb;

namespace {

// One dump whose class signal strength is controlled by `separation`.
LayerDump make_dump(std::size_t layer, std::string pooling, double separation,
                    std::uint64_t seed) {
  LayerDump dump;
  dump.layer = layer;
  dump.pooling = std::move(pooling);
  dump.set.d = 3;
  dump.set.labels = std::vector<int>();
  Rng rng(seed);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < 40; ++i) {
      dump.set.ids.push_back("doc" + std::to_string(c * 40 + i));
      dump.set.labels->push_back(static_cast<int>(c));
      for (std::size_t j = 0; j < 3; ++j)
        dump.set.x.push_back((j == c ? separation : 0.0) + rng.gaussian());
      ++dump.set.n;
    }
  }
  return dump;
}

}  // namespace

TEST_CASE("layer_profile sorts by layer and ranks by signal strength") {
  // pass dumps out of order; strong signal at layer 2, weak at layer 0
  std::vector<LayerDump> dumps;
  dumps.push_back(make_dump(2, "mean", 20.0, 1));
  dumps.push_back(make_dump(0, "mean", 0.0, 1));
  dumps.push_back(make_dump(1, "mean", 3.0, 1));
  KnnConfig cfg;
  cfg.k = 5;
  auto profile = layer_profile(dumps, cfg);
  REQUIRE(profile.size() == 3);
  CHECK(profile[0].first == 0);
  CHECK(profile[1].first == 1);
  CHECK(profile[2].first == 2);
  CHECK(profile[2].second.accuracy == doctest::Approx(100.0));
  CHECK(profile[2].second.accuracy > profile[0].second.accuracy);
}

TEST_CASE("layer_profile shares the split across layers") {
  // identical sets at two layers must score identically
  auto a = make_dump(0, "mean", 5.0, 2);
  auto b = a;
  b.layer = 1;
  KnnConfig cfg;
  cfg.k = 5;
  auto profile = layer_profile({a, b}, cfg);
  CHECK(profile[0].second.accuracy == profile[1].second.accuracy);
  CHECK(profile[0].second.n_test == profile[1].second.n_test);
}

TEST_CASE("layer_profile errors") {
  KnnConfig cfg;
  cfg.k = 5;
  CHECK_THROWS_WITH_AS(layer_profile({make_dump(0, "mean", 1.0, 3)}, cfg),
                       doctest::Contains(">=2"), std::runtime_error);
  auto a = make_dump(0, "mean", 1.0, 3);
  auto b = make_dump(1, "mean", 1.0, 3);
  b.set.ids[0] = "other";
  CHECK_THROWS_WITH_AS(layer_profile({a, b}, cfg), doctest::Contains("ids"),
                       std::runtime_error);
}

TEST_CASE("pooling_profile orders tags lexicographically") {
  std::vector<LayerDump> dumps;
  dumps.push_back(make_dump(12, "mean", 20.0, 4));
  dumps.push_back(make_dump(12, "cls", 0.0, 4));
  dumps.push_back(make_dump(12, "sep", 3.0, 4));
  KnnConfig cfg;
  cfg.k = 5;
  auto profile = pooling_profile(dumps, cfg);
  REQUIRE(profile.size() == 3);
  CHECK(profile[0].first == "cls");
  CHECK(profile[1].first == "mean");
  CHECK(profile[2].first == "sep");
  CHECK(profile[1].second.accuracy == doctest::Approx(100.0));
}

TEST_CASE("parse_dump_name") {
  SUBCASE("basic") {
    auto name = parse_dump_name("bert-base.layer7.mean.emb");
    CHECK(name.model == "bert-base");
    CHECK(name.layer == 7);
    CHECK(name.pooling == "mean");
  }
  SUBCASE("model name containing dots, path prefix stripped") {
    auto name = parse_dump_name("dumps/v1.2/model.v1.2.layer12.cls.emb");
    CHECK(name.model == "model.v1.2");
    CHECK(name.layer == 12);
    CHECK(name.pooling == "cls");
  }
  SUBCASE("layer 0 and multi-digit layers") {
    CHECK(parse_dump_name("m.layer0.mean.emb").layer == 0);
    CHECK(parse_dump_name("m.layer24.token7.emb").layer == 24);
  }
  SUBCASE("malformed names throw and cite the filename") {
    for (const std::string bad :
         {"m.layer7.mean.txt", "m.layer.mean.emb", "m.layerx7.mean.emb",
          "m.mean.emb", "layer7.mean.emb", "m.layer7..emb"}) {
      CHECK_THROWS_WITH_AS(parse_dump_name(bad), doctest::Contains(bad.c_str()),
                           std::runtime_error);
    }
  }
}
