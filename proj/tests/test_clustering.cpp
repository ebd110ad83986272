#include <cmath>
#include <random>

#include "doctest.h"
#include "mvocab/clustering.hpp"
#include "mvocab/error.hpp"
#include "oracles.hpp"

using namespace mvocab;

namespace {

Vocabulary uni(const std::vector<std::string>& pieces) {
  std::vector<std::pair<std::string, double>> probs;
  for (const auto& p : pieces) probs.emplace_back(p, 1.0);
  return make_unigram_vocabulary(probs);
}

// Six languages in two script groups: three share pieces over a..h, three
// over CJK characters; each language keeps a random subset.
std::vector<LanguageVector> two_groups(std::mt19937_64& rng) {
  const std::vector<std::string> latin{"a", "b", "c", "d", "e", "f", "g", "h", "ab", "cd", "ef"};
  const std::vector<std::string> cjk{"中", "国", "人", "大", "小", "山", "中国", "大人"};
  std::vector<Vocabulary> langs;
  std::vector<std::string> all;
  for (int g = 0; g < 2; ++g) {
    const auto& pool = g == 0 ? latin : cjk;
    for (int l = 0; l < 3; ++l) {
      std::vector<std::string> kept;
      for (const auto& p : pool) {
        if (rng() % 4 != 0) kept.push_back(p);
      }
      if (kept.empty()) kept.push_back(pool.front());
      langs.push_back(uni(kept));
    }
  }
  all.insert(all.end(), latin.begin(), latin.end());
  all.insert(all.end(), cjk.begin(), cjk.end());
  const auto global = uni(all);
  std::vector<LanguageVector> out;
  const std::vector<std::string> codes{"la1", "la2", "la3", "zh1", "zh2", "zh3"};
  for (std::size_t i = 0; i < langs.size(); ++i) {
    out.push_back(encode_language(codes[i], langs[i], global));
  }
  return out;
}

std::vector<std::vector<double>> dense(const std::vector<LanguageVector>& vs) {
  std::vector<std::vector<double>> out;
  for (const auto& v : vs) {
    std::vector<double> d(v.dimension(), 0.0);
    for (auto i : v.support()) d[i] = 1.0;
    out.push_back(d);
  }
  return out;
}

}  // namespace

TEST_SUITE("clustering") {

TEST_CASE("language vectors mark membership in the global vocabulary") {
  const auto global = uni({"a", "b", "ab"});
  const auto v = encode_language("xx", uni({"a", "ab"}), global);
  CHECK(v.dimension() == 3);
  CHECK(v.count() == 2);
  CHECK_THROWS_AS(encode_language("xx", uni({"q"}), global), Error);
}

TEST_CASE("cosine distance") {
  const std::vector<double> u{1, 0, 1};
  const std::vector<double> v{1, 1, 0};
  CHECK(cosine_distance(u, v) == doctest::Approx(0.5));
  CHECK(cosine_distance(u, u) == doctest::Approx(0.0));
  const std::vector<double> zero{0, 0, 0};
  CHECK_THROWS_AS(cosine_distance(u, zero), Error);

  const auto global = uni({"a", "b", "c"});
  const auto x = encode_language("x", uni({"a", "c"}), global);
  const auto y = encode_language("y", uni({"a", "b"}), global);
  CHECK(cosine_distance(x, y) == doctest::Approx(0.5));
}

TEST_CASE("two script groups are recovered for every seed") {
  std::mt19937_64 rng(3);
  for (int corpus = 0; corpus < 5; ++corpus) {
    const auto vectors = two_groups(rng);
    for (long long seed = 0; seed < 10; ++seed) {
      KMeansOptions options;
      options.k = 2;
      options.seed = seed;
      const auto model = kmeans(vectors, options);
      CHECK(model.clusters() == std::vector<std::vector<std::string>>{{"la1", "la2", "la3"},
                                                                      {"zh1", "zh2", "zh3"}});
    }
  }
}

TEST_CASE("the script partition has the lowest inertia of all 2-partitions") {
  std::mt19937_64 rng(5);
  const auto vectors = two_groups(rng);
  const auto points = dense(vectors);
  const std::vector<std::size_t> truth{0, 0, 0, 1, 1, 1};
  const double best = oracle::partition_inertia(points, truth, 2);
  for (unsigned mask = 1; mask < (1u << 6) - 1; ++mask) {
    std::vector<std::size_t> labels(6);
    for (std::size_t i = 0; i < 6; ++i) labels[i] = (mask >> i) & 1u;
    if (labels == truth || labels == std::vector<std::size_t>{1, 1, 1, 0, 0, 0}) continue;
    CHECK(best < oracle::partition_inertia(points, labels, 2));
  }
  KMeansOptions options;
  options.k = 2;
  CHECK(kmeans(vectors, options).inertia == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("inertia never increases across iterations") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto global = uni({"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
    std::vector<LanguageVector> vectors;
    for (int l = 0; l < 8; ++l) {
      std::vector<std::string> kept;
      for (char c = 'a'; c <= 'j'; ++c) {
        if (rng() % 2) kept.emplace_back(1, c);
      }
      if (kept.empty()) kept.emplace_back("a");
      vectors.push_back(encode_language("l" + std::to_string(l), uni(kept), global));
    }
    KMeansOptions options;
    options.k = 3;
    options.seed = trial;
    const auto model = kmeans(vectors, options);
    for (std::size_t i = 1; i < model.inertia_trace.size(); ++i) {
      CHECK(model.inertia_trace[i] <= model.inertia_trace[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("results do not depend on input order, and k beyond n is an error") {
  std::mt19937_64 rng(13);
  auto vectors = two_groups(rng);
  KMeansOptions options;
  options.k = 3;
  options.seed = 4;
  const auto a = kmeans(vectors, options);
  std::reverse(vectors.begin(), vectors.end());
  const auto b = kmeans(vectors, options);
  CHECK(a.clusters() == b.clusters());
  CHECK(a.to_json() == b.to_json());
  options.k = 7;
  CHECK_THROWS_AS(kmeans(vectors, options), Error);
}

TEST_CASE("dense and sparse paths agree") {
  std::mt19937_64 rng(17);
  const auto vectors = two_groups(rng);
  KMeansOptions dense_options;
  dense_options.k = 3;
  KMeansOptions sparse_options = dense_options;
  sparse_options.dense_limit = 0;
  CHECK(kmeans(vectors, dense_options).clusters() == kmeans(vectors, sparse_options).clusters());
}

TEST_CASE("cluster JSON round trip") {
  std::mt19937_64 rng(19);
  const auto vectors = two_groups(rng);
  KMeansOptions options;
  options.k = 2;
  const auto model = kmeans(vectors, options);
  const auto back = ClusterModel::from_json(model.to_json());
  CHECK(back.clusters() == model.clusters());
  CHECK(back.k == 2);
  CHECK(back.inertia == doctest::Approx(model.inertia));
}

}  // TEST_SUITE
