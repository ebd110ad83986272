#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvocab/corpus.hpp"
#include "mvocab/trainer.hpp"
#include "mvocab/vocabulary.hpp"

namespace mvocab {

// Settings of one pipeline run. Stored as a "key = value" text file, one key
// per line, '#' comments; see RunConfig::schema() for the keys.
struct RunConfig {
  std::filesystem::path manifest;
  std::size_t k = 8;
  std::optional<std::size_t> total_size;
  std::size_t per_language_size = 32000;
  Algorithm algorithm = Algorithm::kUnigram;
  double character_coverage = kDefaultCharacterCoverage;
  double smoothing_exponent = kDefaultSmoothingExponent;
  long long seed = 0;
  std::filesystem::path out = "run";
  // Inflate the budget until the final union reaches this size.
  std::optional<std::size_t> target_final_size;
  // Per-cluster sentence budget; unset means full pooling.
  std::optional<std::size_t> cluster_sentences;
  std::size_t seed_size = 1000000;
  std::size_t max_piece_length = 16;
  std::size_t em_iterations = 2;
  double prune_fraction = 0.25;

  struct Key {
    std::string_view name;
    std::string_view type;
    std::string_view help;
  };
  static const std::vector<Key>& schema();

  // Usage error on out-of-range values. `require_run` also demands the
  // fields a pipeline run needs (manifest, total_size).
  void validate(bool require_run = false) const;

  TrainerConfig trainer(std::size_t target_size) const;

  std::string get(std::string_view key) const;
  void set(std::string_view key, std::string_view value);

  std::string serialize() const;
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

}  // namespace mvocab
