#include "mvocab/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <new>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"
#include "mvocab/error.hpp"
#include "mvocab/hash.hpp"
#include "mvocab/parallel.hpp"
#include "mvocab/trainer.hpp"

namespace mvocab {

namespace {

using u128 = unsigned __int128;

struct Pinning {
  std::vector<bool> pinned;
  std::uint64_t free_total = 0;  // budget left for unpinned clusters
  std::uint64_t free_union = 0;  // sum of unpinned unions
};

// Pins every cluster whose share of the remaining budget is below its floor,
// repeating until no unpinned cluster is below.
Pinning pin_floors(std::span<const std::uint64_t> unions, std::uint64_t total,
                   const std::vector<std::uint64_t>& floors) {
  Pinning p;
  p.pinned.assign(unions.size(), false);
  p.free_total = total;
  p.free_union = std::accumulate(unions.begin(), unions.end(), std::uint64_t{0});
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<std::size_t> below;
    for (std::size_t i = 0; i < unions.size(); ++i) {
      if (p.pinned[i]) continue;
      if (u128(p.free_total) * unions[i] < u128(floors[i]) * p.free_union) below.push_back(i);
    }
    for (std::size_t i : below) {
      p.pinned[i] = true;
      p.free_total -= floors[i];
      p.free_union -= unions[i];
      changed = true;
    }
  }
  return p;
}

std::vector<std::uint64_t> effective_floors(std::span<const std::uint64_t> unions,
                                            std::uint64_t total,
                                            std::span<const std::uint64_t> floors) {
  if (unions.empty()) throw_usage("allocation needs at least one cluster");
  if (!floors.empty() && floors.size() != unions.size()) {
    throw_usage("allocation floors and unions differ in length");
  }
  if (total < unions.size()) {
    throw_usage("total size " + std::to_string(total) + " is below the number of clusters (" +
                std::to_string(unions.size()) + ")");
  }
  std::vector<std::uint64_t> out(unions.size(), 1);
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < unions.size(); ++i) {
    if (unions[i] == 0) throw_usage("cluster " + std::to_string(i) + " has an empty union");
    if (!floors.empty()) out[i] = std::max<std::uint64_t>(1, floors[i]);
    sum += out[i];
  }
  if (total < sum) {
    throw_usage("total size " + std::to_string(total) + " is below the sum of cluster floors (" +
                std::to_string(sum) + ")");
  }
  return out;
}

class StageError {
 public:
  explicit StageError(const char* stage) : stage_(stage) {}

  template <typename Fn>
  auto operator()(Fn&& fn) const {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.kind(), prefix() + e.what());
    } catch (const std::filesystem::filesystem_error& e) {
      throw Error(ErrorKind::kIo, prefix() + e.what());
    } catch (const std::bad_alloc&) {
      throw Error(ErrorKind::kTraining, prefix() + "out of memory");
    }
  }

 private:
  std::string prefix() const { return std::string(stage_) + ": "; }
  const char* stage_;
};

std::string corpus_digest(const LanguageCorpus& corpus) {
  std::string joined;
  for (const auto& s : corpus.sentences()) {
    joined += s;
    joined += '\n';
  }
  return sha256_hex(joined);
}

std::string training_key(const LanguageCorpus& corpus, const TrainerConfig& t) {
  std::string key = "algorithm=" + std::string(to_string(t.algorithm)) +
                    " size=" + std::to_string(t.target_size) +
                    " coverage=" + std::to_string(t.character_coverage) +
                    " seed_size=" + std::to_string(t.seed_size) +
                    " max_len=" + std::to_string(t.max_piece_length) +
                    " em=" + std::to_string(t.em_iterations_per_round) +
                    " prune=" + std::to_string(t.prune_fraction) +
                    " seed=" + std::to_string(t.random_seed) + " corpus=" + corpus_digest(corpus);
  return sha256_hex(key);
}

// Loads `path` when resuming and its key sidecar matches, otherwise trains
// and writes the vocabulary, then the sidecar.
Vocabulary train_cached(const std::filesystem::path& path, const LanguageCorpus& corpus,
                        const TrainerConfig& trainer, bool resume, bool* reused) {
  const auto key_path = std::filesystem::path(path).concat(".key");
  const std::string key = training_key(corpus, trainer);
  if (resume && std::filesystem::exists(path) && std::filesystem::exists(key_path) &&
      read_file(key_path) == key + "\n") {
    *reused = true;
    return Vocabulary::load(path);
  }
  *reused = false;
  const std::string text = train_vocabulary(corpus, trainer).serialize();
  write_file_atomic(path, text);
  write_file_atomic(key_path, key + "\n");
  return Vocabulary::parse(text);
}

// Sentence budget split over member languages by the smoothed sampling
// distribution (largest remainder), each drawn uniformly with replacement.
LanguageCorpus sample_pool(std::span<const LanguageCorpus> members, std::size_t budget,
                           double alpha, long long seed, std::size_t cluster,
                           const std::string& name) {
  const auto dist = sampling_distribution(members, alpha);
  std::vector<std::size_t> quota(members.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const double share = static_cast<double>(budget) * dist.weight(members[i].language());
    quota[i] = static_cast<std::size_t>(share);
    assigned += quota[i];
    remainders.emplace_back(share - static_cast<double>(quota[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < budget; ++r, ++assigned) {
    ++quota[remainders[r % remainders.size()].second];
  }
  std::vector<std::string> pooled;
  pooled.reserve(budget);
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& sentences = members[i].sentences();
    if (sentences.empty()) continue;
    std::seed_seq seq{static_cast<std::uint64_t>(seed), std::uint64_t{cluster},
                      std::uint64_t{i}};
    std::mt19937_64 rng(seq);
    for (std::size_t n = 0; n < quota[i]; ++n) {
      pooled.push_back(sentences[rng() % sentences.size()]);
    }
  }
  return LanguageCorpus(name, std::move(pooled));
}

void note(const PipelineOptions& options, const std::string& stage, const std::string& msg) {
  if (options.log) *options.log << "[" << stage << "] " << msg << "\n" << std::flush;
}

}  // namespace

AllocationPlan allocate_sizes(std::span<const std::uint64_t> unions, std::uint64_t total_size,
                              std::span<const std::uint64_t> floors) {
  const auto floor = effective_floors(unions, total_size, floors);
  const Pinning pin = pin_floors(unions, total_size, floor);

  AllocationPlan plan;
  plan.cluster_unions.assign(unions.begin(), unions.end());
  plan.floors = floor;
  plan.total_size = total_size;
  plan.cluster_sizes.assign(unions.size(), 0);

  std::vector<std::size_t> free;
  std::vector<std::uint64_t> remainder(unions.size(), 0);
  std::uint64_t seated = 0;
  for (std::size_t i = 0; i < unions.size(); ++i) {
    if (pin.pinned[i]) {
      plan.cluster_sizes[i] = floor[i];
      continue;
    }
    const u128 scaled = u128(pin.free_total) * unions[i];
    plan.cluster_sizes[i] = static_cast<std::uint64_t>(scaled / pin.free_union);
    remainder[i] = static_cast<std::uint64_t>(scaled % pin.free_union);
    seated += plan.cluster_sizes[i];
    free.push_back(i);
  }
  std::sort(free.begin(), free.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    if (unions[a] != unions[b]) return unions[a] > unions[b];
    return a < b;
  });
  for (std::size_t r = 0; seated < pin.free_total; ++r, ++seated) {
    ++plan.cluster_sizes[free[r]];
  }
  return plan;
}

std::vector<double> proportional_shares(std::span<const std::uint64_t> unions,
                                        std::uint64_t total_size,
                                        std::span<const std::uint64_t> floors) {
  const auto floor = effective_floors(unions, total_size, floors);
  const Pinning pin = pin_floors(unions, total_size, floor);
  std::vector<double> shares(unions.size());
  for (std::size_t i = 0; i < unions.size(); ++i) {
    shares[i] = pin.pinned[i] ? static_cast<double>(floor[i])
                              : static_cast<double>(pin.free_total) *
                                    static_cast<double>(unions[i]) /
                                    static_cast<double>(pin.free_union);
  }
  return shares;
}

std::string AllocationPlan::to_json() const {
  nlohmann::ordered_json j;
  j["total_size"] = total_size;
  auto& clusters = j["clusters"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cluster_sizes.size(); ++i) {
    clusters.push_back(
        {{"union", cluster_unions[i]}, {"floor", floors[i]}, {"size", cluster_sizes[i]}});
  }
  return j.dump(2) + "\n";
}

LanguageCorpus joint_corpus(std::span<const LanguageCorpus> corpora) {
  return pool_corpora(corpora, "joint");
}

PipelineRun run_pipeline(const RunConfig& config, const PipelineOptions& options) {
  StageError("config")([&] { config.validate(true); });
  namespace fs = std::filesystem;
  const fs::path& out = config.out;

  PipelineRun run;
  run.config = config;

  std::vector<ManifestEntry> entries;
  std::vector<LanguageCorpus> corpora;
  StageError("load")([&] {
    entries = load_manifest(config.manifest);
    if (entries.empty()) throw_usage("manifest '" + config.manifest.string() + "' is empty");
    corpora = load_corpora(entries);
    for (const auto& c : corpora) {
      if (c.empty()) throw_training("corpus of '" + c.language() + "' has no sentences");
      run.languages.push_back(c.language());
    }
    if (config.k > corpora.size()) {
      throw_usage("k = " + std::to_string(config.k) + " exceeds the number of languages (" +
                  std::to_string(corpora.size()) + ")");
    }
    fs::create_directories(out / "per_lang");
  });
  note(options, "load", std::to_string(corpora.size()) + " languages");

  std::vector<Vocabulary> per_lang(corpora.size());
  StageError("per-language")([&] {
    const auto trainer = config.trainer(config.per_language_size);
    std::vector<char> reused(corpora.size(), 0);
    parallel_for(corpora.size(), options.jobs, [&](std::size_t i) {
      bool hit = false;
      per_lang[i] = train_cached(out / "per_lang" / (corpora[i].language() + ".vocab"),
                                 corpora[i], trainer, options.resume, &hit);
      reused[i] = hit;
    });
    for (std::size_t i = 0; i < corpora.size(); ++i) {
      const std::string rel = "per_lang/" + corpora[i].language() + ".vocab";
      if (reused[i]) run.reused.push_back(rel);
      run.per_language_vocabs.emplace(corpora[i].language(), per_lang[i]);
      note(options, "per-language",
           rel + (reused[i] ? " (cached)" : "") + " size " + std::to_string(per_lang[i].size()));
    }
  });

  std::vector<LanguageVector> vectors;
  StageError("global")([&] {
    run.global_vocab = union_vocab(per_lang);
    write_file_atomic(out / "global.vocab", run.global_vocab.serialize());
    for (std::size_t i = 0; i < corpora.size(); ++i) {
      vectors.push_back(encode_language(corpora[i].language(), per_lang[i], run.global_vocab));
    }
  });
  note(options, "global", "size " + std::to_string(run.global_vocab.size()));

  StageError("clustering")([&] {
    KMeansOptions km;
    km.k = config.k;
    km.seed = config.seed;
    run.cluster_model = kmeans(vectors, km);
    write_file_atomic(out / "clusters.json", run.cluster_model.to_json());
  });
  const auto groups = run.cluster_model.clusters();
  for (std::size_t c = 0; c < groups.size(); ++c) {
    std::string members;
    for (const auto& l : groups[c]) members += " " + l;
    note(options, "clustering", "cluster " + std::to_string(c) + ":" + members);
  }

  // Member corpora of each cluster in manifest order.
  std::vector<LanguageCorpus> pools(groups.size());
  std::vector<std::uint64_t> unions(groups.size());
  std::vector<std::uint64_t> floors(groups.size());
  StageError("pooling")([&] {
    for (std::size_t c = 0; c < groups.size(); ++c) {
      std::vector<LanguageCorpus> members;
      std::vector<Vocabulary> member_vocabs;
      for (std::size_t i = 0; i < corpora.size(); ++i) {
        if (run.cluster_model.cluster_of(corpora[i].language()) != c) continue;
        members.push_back(corpora[i]);
        member_vocabs.push_back(per_lang[i]);
      }
      const std::string name = "cluster_" + std::to_string(c);
      pools[c] = config.cluster_sentences
                     ? sample_pool(members, *config.cluster_sentences,
                                   config.smoothing_exponent, config.seed, c, name)
                     : pool_corpora(members, name);
      unions[c] = union_vocab(member_vocabs).size();
      floors[c] = coverage_alphabet(pools[c], config.character_coverage).size() + 1;
    }
  });

  std::uint64_t budget = config.total_size.value_or(config.target_final_size.value_or(0));
  constexpr std::size_t kMaxBudgetRounds = 5;
  for (std::size_t round = 1;; ++round) {
    run.budget_rounds = round;
    StageError("allocation")([&] {
      run.allocation = allocate_sizes(unions, budget, floors);
      write_file_atomic(out / "allocation.json", run.allocation.to_json());
    });
    note(options, "allocation", "budget " + std::to_string(budget));

    run.cluster_vocabs.assign(groups.size(), Vocabulary{});
    StageError("cluster-training")([&] {
      std::vector<char> reused(groups.size(), 0);
      parallel_for(groups.size(), options.jobs, [&](std::size_t c) {
        bool hit = false;
        run.cluster_vocabs[c] = train_cached(
            out / ("cluster_" + std::to_string(c) + ".vocab"), pools[c],
            config.trainer(run.allocation.cluster_sizes[c]), options.resume, &hit);
        reused[c] = hit;
      });
      for (std::size_t c = 0; c < groups.size(); ++c) {
        const std::string rel = "cluster_" + std::to_string(c) + ".vocab";
        if (reused[c]) run.reused.push_back(rel);
        note(options, "cluster-training",
             rel + (reused[c] ? " (cached)" : "") + " size " +
                 std::to_string(run.cluster_vocabs[c].size()));
      }
    });

    StageError("union")([&] { run.final_vocab = union_vocab(run.cluster_vocabs); });
    note(options, "union", "final size " + std::to_string(run.final_vocab.size()));

    if (!config.target_final_size || run.final_vocab.size() >= *config.target_final_size ||
        round == kMaxBudgetRounds) {
      break;
    }
    const std::uint64_t target = *config.target_final_size;
    const std::uint64_t grown = static_cast<std::uint64_t>(
        (u128(budget) * target + run.final_vocab.size() - 1) / run.final_vocab.size());
    budget = std::max(budget + 1, grown);
  }

  StageError("write")([&] {
    write_file_atomic(out / "final.vocab", run.final_vocab.serialize());

    std::vector<std::string> files;
    for (const auto& c : corpora) files.push_back("per_lang/" + c.language() + ".vocab");
    files.push_back("global.vocab");
    files.push_back("clusters.json");
    files.push_back("allocation.json");
    for (std::size_t c = 0; c < groups.size(); ++c) {
      files.push_back("cluster_" + std::to_string(c) + ".vocab");
    }
    files.push_back("final.vocab");
    for (const auto& f : files) run.artifacts[f] = sha256_file(out / f);

    nlohmann::ordered_json j;
    auto& cfg = j["config"];
    for (const auto& key : RunConfig::schema()) cfg[std::string(key.name)] = config.get(key.name);
    auto& inputs = j["inputs"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      nlohmann::ordered_json in{{"language", entries[i].language},
                                {"path", entries[i].path.string()},
                                {"sentences", corpora[i].sentence_count()},
                                {"sha256", sha256_file(entries[i].path)}};
      in["max_sentences"] = entries[i].max_sentences ? nlohmann::ordered_json(*entries[i].max_sentences)
                                                      : nlohmann::ordered_json(nullptr);
      inputs.push_back(std::move(in));
    }
    j["budget_rounds"] = run.budget_rounds;
    j["final_size"] = run.final_vocab.size();
    auto& hashes = j["artifacts"];
    for (const auto& f : files) hashes[f] = run.artifacts.at(f);
    write_file_atomic(out / "run.json", j.dump(2) + "\n");
  });
  note(options, "write", (out / "run.json").string());
  return run;
}

}  // namespace mvocab
