#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mvocab/clustering.hpp"
#include "mvocab/corpus.hpp"
#include "mvocab/run_config.hpp"
#include "mvocab/vocabulary.hpp"

namespace mvocab {

struct AllocationPlan {
  std::vector<std::uint64_t> cluster_unions;
  std::vector<std::uint64_t> floors;
  std::vector<std::uint64_t> cluster_sizes;
  std::uint64_t total_size = 0;

  std::string to_json() const;
};

// Largest-remainder apportionment of `total_size` proportional to `unions`.
// Clusters whose proportional share falls below their floor are pinned to it
// first and the rest is apportioned over the others; remainder ties go to the
// larger union, then the lower index. Every cluster gets at least one.
// Empty `floors` means no floors.
AllocationPlan allocate_sizes(std::span<const std::uint64_t> unions, std::uint64_t total_size,
                              std::span<const std::uint64_t> floors = {});

// Real-valued shares under the same floor pinning.
std::vector<double> proportional_shares(std::span<const std::uint64_t> unions,
                                        std::uint64_t total_size,
                                        std::span<const std::uint64_t> floors = {});

struct PipelineOptions {
  std::size_t jobs = 1;
  bool resume = false;
  std::ostream* log = nullptr;
};

struct PipelineRun {
  RunConfig config;
  std::vector<std::string> languages;  // manifest order
  std::map<std::string, Vocabulary> per_language_vocabs;
  Vocabulary global_vocab;
  ClusterModel cluster_model;
  AllocationPlan allocation;
  std::vector<Vocabulary> cluster_vocabs;  // indexed like cluster_model.clusters()
  Vocabulary final_vocab;
  std::size_t budget_rounds = 1;
  std::vector<std::string> reused;  // artifacts taken from a previous run
  std::map<std::string, std::string> artifacts;  // run-relative path -> sha256
};

// Runs every stage and writes the run directory:
//   per_lang/<code>.vocab, global.vocab, clusters.json, allocation.json,
//   cluster_<i>.vocab, final.vocab, run.json
// Failures are rethrown with the stage name prefixed; files already written
// stay on disk. With `resume`, per-language and cluster vocabularies whose
// inputs are unchanged are loaded instead of retrained.
PipelineRun run_pipeline(const RunConfig& config, const PipelineOptions& options = {});

// The pooled corpus of a k=1 run: every manifest language in manifest order.
LanguageCorpus joint_corpus(std::span<const LanguageCorpus> corpora);

}  // namespace mvocab
