#include "mvocab/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "json.hpp"
#include "mvocab/error.hpp"
#include "mvocab/simd/kernels.hpp"

namespace mvocab {

LanguageVector::LanguageVector(std::string language, std::size_t dimension,
                               std::vector<std::size_t> support)
    : language_(std::move(language)), dimension_(dimension), support_(std::move(support)) {
  std::sort(support_.begin(), support_.end());
  support_.erase(std::unique(support_.begin(), support_.end()), support_.end());
  if (support_.empty()) throw_training("language vector for '" + language_ + "' is empty");
  if (support_.back() >= dimension_) throw_training("language vector index out of range");
  if (dimension_ <= kDenseDimensionLimit) {
    words_.assign((dimension_ + 63) / 64, 0);
    for (std::size_t i : support_) words_[i / 64] |= std::uint64_t{1} << (i % 64);
  }
}

bool LanguageVector::test(std::size_t i) const {
  if (!words_.empty()) return (words_[i / 64] >> (i % 64)) & 1u;
  return std::binary_search(support_.begin(), support_.end(), i);
}

LanguageVector encode_language(const std::string& language, const Vocabulary& language_vocab,
                               const Vocabulary& global) {
  // Global index space skips specials.
  std::vector<std::size_t> column(global.size(), 0);
  std::size_t dimension = 0;
  for (std::size_t i = 0; i < global.size(); ++i) {
    if (global.pieces()[i].kind != PieceKind::kSpecial) column[i] = dimension++;
  }
  std::vector<std::size_t> support;
  for (const auto& p : language_vocab.pieces()) {
    if (p.kind == PieceKind::kSpecial) continue;
    auto id = global.find(p.text);
    if (!id) {
      throw_training("piece '" + p.text + "' of language '" + language +
                     "' is missing from the global vocabulary");
    }
    support.push_back(column[*id]);
  }
  return LanguageVector(language, dimension, std::move(support));
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw_usage("cosine distance of vectors with different sizes");
  const double uu = simd::dot(u, u);
  const double vv = simd::dot(v, v);
  if (uu == 0.0 || vv == 0.0) throw_usage("cosine distance of a zero vector");
  return std::max(0.0, 1.0 - simd::dot(u, v) / (std::sqrt(uu) * std::sqrt(vv)));
}

double cosine_distance(const LanguageVector& u, const LanguageVector& v) {
  if (u.dimension() != v.dimension()) {
    throw_usage("cosine distance of vectors with different dimensions");
  }
  std::uint64_t shared = 0;
  if (!u.words().empty() && !v.words().empty()) {
    shared = simd::and_popcount(u.words(), v.words());
  } else {
    const auto& a = u.support();
    const auto& b = v.support();
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] < b[j]) ++i;
      else if (b[j] < a[i]) ++j;
      else ++shared, ++i, ++j;
    }
  }
  const double denom = std::sqrt(static_cast<double>(u.count()) * static_cast<double>(v.count()));
  return std::max(0.0, 1.0 - static_cast<double>(shared) / denom);
}

namespace {

// Unit-normalized points, either as dense rows or as index sets with a common
// per-point weight 1/sqrt(count).
class PointSet {
 public:
  PointSet(std::span<const LanguageVector* const> vectors, bool dense)
      : vectors_(vectors.begin(), vectors.end()), dense_(dense) {
    dimension_ = vectors_.front()->dimension();
    for (const auto* v : vectors_) {
      const double w = 1.0 / std::sqrt(static_cast<double>(v->count()));
      weight_.push_back(w);
      if (dense_) {
        std::vector<double> row(dimension_, 0.0);
        for (std::size_t i : v->support()) row[i] = w;
        rows_.push_back(std::move(row));
      }
    }
  }

  std::size_t size() const { return vectors_.size(); }
  std::size_t dimension() const { return dimension_; }
  const LanguageVector& vector(std::size_t i) const { return *vectors_[i]; }

  double dot(std::size_t i, const std::vector<double>& centroid) const {
    if (dense_) return simd::dot(rows_[i], centroid);
    double sum = 0.0;
    for (std::size_t idx : vectors_[i]->support()) sum += centroid[idx];
    return sum * weight_[i];
  }

  void accumulate(std::size_t i, std::vector<double>& centroid) const {
    if (dense_) {
      simd::axpy(1.0, rows_[i], centroid);
      return;
    }
    for (std::size_t idx : vectors_[i]->support()) centroid[idx] += weight_[i];
  }

  void assign_point(std::size_t i, std::vector<double>& centroid) const {
    std::fill(centroid.begin(), centroid.end(), 0.0);
    accumulate(i, centroid);
  }

 private:
  std::vector<const LanguageVector*> vectors_;
  bool dense_;
  std::size_t dimension_ = 0;
  std::vector<double> weight_;
  std::vector<std::vector<double>> rows_;
};

// Uniform double in [0, 1) from 53 random bits, stable across standard libraries.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct RunResult {
  std::vector<std::size_t> assignment;
  std::vector<std::vector<double>> centroids;
  double inertia = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
};

void normalize_centroid(std::vector<double>& c) {
  const double norm = std::sqrt(simd::dot(c, c));
  if (norm > 0.0) simd::scale(1.0 / norm, c);
}

// Greedy k-means++: each step draws a few candidates by distance and keeps
// the one that leaves the smallest total distance.
std::vector<std::size_t> plus_plus_init(const PointSet& points, std::size_t k,
                                        std::mt19937_64& rng) {
  const std::size_t n = points.size();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<std::size_t> centers;
  std::vector<bool> chosen(n, false);
  centers.push_back(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  chosen[centers.back()] = true;
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    nearest[i] = cosine_distance(points.vector(i), points.vector(centers.back()));
  }
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i]) total += nearest[i];
    }
    std::vector<std::size_t> candidates;
    if (total > 0.0) {
      for (std::size_t t = 0; t < trials; ++t) {
        double target = uniform01(rng) * total;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (chosen[i] || nearest[i] <= 0.0) continue;
          pick = i;
          target -= nearest[i];
          if (target < 0.0) break;
        }
        if (pick != n) candidates.push_back(pick);
      }
    }
    if (candidates.empty()) {
      for (std::size_t i = 0; i < n && candidates.empty(); ++i) {
        if (!chosen[i]) candidates.push_back(i);
      }
    }
    std::size_t best = n;
    double best_potential = std::numeric_limits<double>::infinity();
    std::vector<double> best_nearest;
    for (const std::size_t c : candidates) {
      std::vector<double> next = nearest;
      double potential = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] = std::min(next[i], cosine_distance(points.vector(i), points.vector(c)));
        potential += next[i];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best = c;
        best_nearest = std::move(next);
      }
    }
    chosen[best] = true;
    centers.push_back(best);
    nearest = std::move(best_nearest);
  }
  return centers;
}

RunResult lloyd(const PointSet& points, std::size_t k, std::mt19937_64& rng,
                std::size_t max_iterations) {
  const std::size_t n = points.size();
  RunResult run;
  run.centroids.assign(k, std::vector<double>(points.dimension(), 0.0));
  const auto centers = plus_plus_init(points, k, rng);
  for (std::size_t c = 0; c < k; ++c) points.assign_point(centers[c], run.centroids[c]);
  for (auto& c : run.centroids) normalize_centroid(c);

  std::vector<std::size_t> previous;
  std::vector<double> similarity(n, 0.0);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    std::vector<std::size_t> assignment(n, 0);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double s = points.dot(i, run.centroids[c]);
        if (s > best) {
          best = s;
          assignment[i] = c;
        }
      }
      similarity[i] = best;
      ++sizes[assignment[i]];
    }
    // An empty cluster takes the point farthest from its centroid among
    // clusters that can spare one.
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[assignment[i]] < 2) continue;
        if (far == n || similarity[i] < similarity[far]) far = i;
      }
      --sizes[assignment[far]];
      assignment[far] = c;
      sizes[c] = 1;
      similarity[far] = 1.0;
    }

    for (auto& centroid : run.centroids) std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) points.accumulate(i, run.centroids[assignment[i]]);
    for (auto& centroid : run.centroids) normalize_centroid(centroid);

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += std::max(0.0, 1.0 - points.dot(i, run.centroids[assignment[i]]));
    }
    run.trace.push_back(inertia);
    run.inertia = inertia;
    const bool stable = assignment == previous;
    previous = assignment;
    run.assignment = std::move(assignment);
    if (stable) break;
  }
  return run;
}

}  // namespace

std::vector<std::vector<std::string>> ClusterModel::clusters() const {
  std::vector<std::vector<std::string>> out(k);
  for (std::size_t i = 0; i < languages.size(); ++i) out[assignment[i]].push_back(languages[i]);
  return out;
}

std::size_t ClusterModel::cluster_of(const std::string& language) const {
  auto it = std::lower_bound(languages.begin(), languages.end(), language);
  if (it == languages.end() || *it != language) {
    throw_usage("language '" + language + "' is not in the cluster model");
  }
  return assignment[static_cast<std::size_t>(it - languages.begin())];
}

std::string ClusterModel::to_json() const {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["seed"] = seed;
  j["clusters"] = clusters();
  j["inertia"] = inertia;
  return j.dump(2) + "\n";
}

ClusterModel ClusterModel::from_json(std::string_view json) {
  ClusterModel model;
  try {
    const auto j = nlohmann::json::parse(json);
    model.k = j.at("k").get<std::size_t>();
    model.seed = j.at("seed").get<long long>();
    model.inertia = j.at("inertia").get<double>();
    const auto groups = j.at("clusters").get<std::vector<std::vector<std::string>>>();
    if (groups.size() != model.k) throw_io("cluster file: 'k' disagrees with 'clusters'");
    std::map<std::string, std::size_t> owner;
    for (std::size_t c = 0; c < groups.size(); ++c) {
      for (const auto& lang : groups[c]) {
        if (!owner.emplace(lang, c).second) throw_io("cluster file: language listed twice");
      }
    }
    for (const auto& [lang, c] : owner) {
      model.languages.push_back(lang);
      model.assignment.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw_io(std::string("cluster file: ") + e.what());
  }
  return model;
}

ClusterModel kmeans(std::span<const LanguageVector> vectors, const KMeansOptions& options) {
  if (options.k < 1) throw_usage("k must be at least 1");
  if (options.k > vectors.size()) {
    throw_usage("k = " + std::to_string(options.k) + " exceeds the number of languages (" +
                std::to_string(vectors.size()) + ")");
  }
  if (options.restarts < 1) throw_usage("restarts must be at least 1");

  std::vector<const LanguageVector*> ordered;
  for (const auto& v : vectors) ordered.push_back(&v);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->language() < b->language(); });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i]->language() == ordered[i - 1]->language()) {
      throw_usage("duplicate language '" + ordered[i]->language() + "'");
    }
    if (ordered[i]->dimension() != ordered[0]->dimension()) {
      throw_usage("language vectors differ in dimension");
    }
  }

  const PointSet points(ordered, ordered.front()->dimension() <= options.dense_limit);
  RunResult best;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint64_t>(options.seed), static_cast<std::uint64_t>(r)};
    std::mt19937_64 rng(seq);
    RunResult run = lloyd(points, options.k, rng, options.max_iterations);
    if (run.inertia < best.inertia) best = std::move(run);
  }

  // Relabel clusters by their smallest member language.
  std::vector<std::size_t> first_member(options.k, ordered.size());
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    first_member[best.assignment[i]] = std::min(first_member[best.assignment[i]], i);
  }
  std::vector<std::size_t> order(options.k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return first_member[a] < first_member[b]; });
  std::vector<std::size_t> relabel(options.k);
  for (std::size_t c = 0; c < options.k; ++c) relabel[order[c]] = c;

  ClusterModel model;
  model.k = options.k;
  model.seed = options.seed;
  for (const auto* v : ordered) model.languages.push_back(v->language());
  for (std::size_t a : best.assignment) model.assignment.push_back(relabel[a]);
  model.centroids.resize(options.k);
  for (std::size_t c = 0; c < options.k; ++c) {
    model.centroids[relabel[c]] = std::move(best.centroids[c]);
  }
  model.inertia = best.inertia;
  model.inertia_trace = std::move(best.trace);
  return model;
}

}  // namespace mvocab
