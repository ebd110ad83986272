#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvocab/vocabulary.hpp"

namespace mvocab {

// Above this dimension vectors are kept as sorted index sets only.
inline constexpr std::size_t kDenseDimensionLimit = 1000000;

// Binary membership vector of one language's vocabulary inside the global
// vocabulary: bit i is set iff the i-th non-special global piece belongs to
// the language.
class LanguageVector {
 public:
  LanguageVector(std::string language, std::size_t dimension,
                 std::vector<std::size_t> support);

  const std::string& language() const { return language_; }
  std::size_t dimension() const { return dimension_; }
  const std::vector<std::size_t>& support() const { return support_; }
  std::size_t count() const { return support_.size(); }
  bool test(std::size_t i) const;

  // Packed bits; empty when dimension exceeds kDenseDimensionLimit.
  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  std::string language_;
  std::size_t dimension_;
  std::vector<std::size_t> support_;
  std::vector<std::uint64_t> words_;
};

// Errors if `language_vocab` has a piece missing from `global`.
LanguageVector encode_language(const std::string& language,
                               const Vocabulary& language_vocab,
                               const Vocabulary& global);

// 1 - u.v / (|u| |v|); zero vectors are an error.
double cosine_distance(std::span<const double> u, std::span<const double> v);
double cosine_distance(const LanguageVector& u, const LanguageVector& v);

struct KMeansOptions {
  std::size_t k = 8;
  long long seed = 0;
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
  std::size_t dense_limit = kDenseDimensionLimit;
};

// Spherical k-means result. Languages are held in ascending code order and
// clusters are labelled by their smallest member, so the model does not
// depend on input order.
struct ClusterModel {
  std::size_t k = 0;
  long long seed = 0;
  std::vector<std::string> languages;
  std::vector<std::size_t> assignment;          // parallel to languages
  std::vector<std::vector<double>> centroids;   // unit norm
  double inertia = 0.0;                         // sum of cosine distances
  std::vector<double> inertia_trace;            // per iteration, winning restart

  std::vector<std::vector<std::string>> clusters() const;
  std::size_t cluster_of(const std::string& language) const;

  // {"k", "seed", "clusters", "inertia"}
  std::string to_json() const;
  // Restores k, seed, languages, assignment and inertia (no centroids).
  static ClusterModel from_json(std::string_view json);
};

ClusterModel kmeans(std::span<const LanguageVector> vectors, const KMeansOptions& options);

}  // namespace mvocab
