// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails that was not named with --known-failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>

#include "mvocab/analysis.hpp"
#include "mvocab/cli.hpp"
#include "mvocab/clustering.hpp"
#include "mvocab/hash.hpp"
#include "mvocab/pipeline.hpp"
#include "mvocab/segmentation.hpp"
#include "mvocab/synthetic.hpp"
#include "mvocab/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace mvocab;

namespace {

constexpr std::size_t kPerLanguageSize = 4000;
constexpr std::size_t kTotalSize = 12000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  std::string id;
  bool pass;
};

std::vector<Outcome> outcomes;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("%s criterion %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  outcomes.push_back({id, pass});
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

int cli(const std::vector<std::string>& args) {
  std::istringstream in;
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, in, out, err);
  if (code != 0) std::cerr << "mvocab " << args.front() << " failed: " << err.str();
  return code;
}

bool pipeline(const fs::path& manifest, const fs::path& out, std::size_t k, long long seed) {
  return cli({"pipeline", "--manifest", manifest.string(), "--k", std::to_string(k),
              "--total-size", std::to_string(kTotalSize), "--per-lang-size",
              std::to_string(kPerLanguageSize), "--seed", std::to_string(seed), "--out",
              out.string()}) == 0;
}

// ---------------------------------------------------------------------------

void viterbi_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2);
  const std::u32string letters = U"▁abc";
  std::size_t agree = 0;
  const std::size_t trials = 1000;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<Piece> pieces;
    std::set<std::u32string> seen;
    const std::size_t n = 1 + rng() % 12;
    while (pieces.size() < n) {
      std::u32string s;
      for (std::size_t i = 0, len = 1 + rng() % 3; i < len; ++i) s += letters[rng() % letters.size()];
      if (!seen.insert(s).second) continue;
      // dyadic scores keep every sum exact
      pieces.push_back(Piece{utf8::encode(std::u32string_view(s)),
                             -static_cast<double>(1 + rng() % 64) / 16.0});
    }
    const Vocabulary vocab(Algorithm::kUnigram, std::move(pieces));
    std::u32string text;
    for (std::size_t i = 0, len = 1 + rng() % 10; i < len; ++i) text += letters[rng() % letters.size()];
    const std::string s = utf8::encode(std::u32string_view(text));
    const auto seg = encode(vocab, s);
    const auto best = oracle::best_segmentation(vocab, s);
    if (seg.log_prob == best.score && seg.pieces == best.pieces) ++agree;
  }
  const double elapsed = seconds_since(start);
  report("2", agree == trials && elapsed < 30,
         fmt("Viterbi = brute force on %.0f/%.0f instances (score and tie-break), %.2fs", agree,
             trials, elapsed));
}

LanguageCorpus small_corpus(std::mt19937_64& rng, std::size_t sentences) {
  const std::string letters = "abcde";
  std::vector<std::string> out;
  for (std::size_t s = 0; s < sentences; ++s) {
    std::string line;
    for (std::size_t w = 0, words = 1 + rng() % 3; w < words; ++w) {
      if (w) line += ' ';
      for (std::size_t i = 0, len = 1 + rng() % 5; i < len; ++i) {
        line += letters[rng() % (1 + rng() % letters.size())];
      }
    }
    out.push_back(line);
  }
  return LanguageCorpus("xx", std::move(out));
}

void em_monotonicity() {
  const auto start = Clock::now();
  std::mt19937_64 rng(3);
  std::size_t steps = 0;
  std::size_t violations = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto corpus = small_corpus(rng, 50 + rng() % 150);
    TrainerConfig config;
    config.character_coverage = 1.0;
    config.em_iterations_per_round = 1 + rng() % 5;
    config.target_size = size_floor(SegmentTable::build(corpus, 1.0)) + 2 + rng() % 20;
    TrainingTrace trace;
    train_unigram(corpus, config, &trace);
    for (std::size_t i = 1; i < trace.em_steps.size(); ++i) {
      const auto& a = trace.em_steps[i - 1];
      const auto& b = trace.em_steps[i];
      if (a.round != b.round) continue;
      ++steps;
      const double rise = (b.nll - a.nll) / std::fabs(a.nll);
      worst = std::max(worst, rise);
      if (rise > 1e-9) ++violations;
    }
  }
  const double elapsed = seconds_since(start);
  report("3", violations == 0 && elapsed < 120,
         fmt("NLL non-increasing over %.0f EM iterations of 50 corpora (largest relative rise "
             "%.2e), %.2fs",
             steps, worst, elapsed));
}

void pruning_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(4);
  std::size_t rounds = 0;
  std::size_t bad = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto corpus = small_corpus(rng, 20 + rng() % 30);
    const auto table = SegmentTable::build(corpus, 1.0);
    TrainerConfig config;
    config.character_coverage = 1.0;
    config.seed_size = 1 + rng() % 20;
    config.target_size = size_floor(table) + rng() % 4;
    TrainingTrace trace;
    train_unigram(corpus, config, &trace);
    for (const auto& round : trace.prune_rounds) {
      ++rounds;
      std::map<std::u32string, double> logp;
      for (const auto& [text, lp] : round.pieces) logp[utf8::decode(text)] = lp;
      const double base = oracle::corpus_nll(logp, table.segments);
      const double tol = 1e-9 * (1.0 + std::fabs(base));
      std::map<std::string, double> loss;
      double oracle_min = INFINITY;
      for (const auto& [text, lp] : round.pieces) {
        if (utf8::codepoint_count(text) == 1) continue;
        auto without = logp;
        without.erase(utf8::decode(text));
        loss[text] = oracle::corpus_nll(without, table.segments) - base;
        oracle_min = std::min(oracle_min, loss[text]);
      }
      double trainer_min = INFINITY;
      for (const auto& [text, l] : round.losses) trainer_min = std::min(trainer_min, l);
      bool ok = std::fabs(trainer_min - oracle_min) <= tol && std::fabs(base - round.nll) <= tol;
      double worst_pruned = -INFINITY;
      for (const auto& p : round.pruned) worst_pruned = std::max(worst_pruned, loss.at(p));
      const std::set<std::string> pruned(round.pruned.begin(), round.pruned.end());
      for (const auto& [text, l] : loss) {
        if (!pruned.count(text) && l < worst_pruned - tol) ok = false;
      }
      if (!ok) ++bad;
    }
  }
  const double elapsed = seconds_since(start);
  report("4", bad == 0 && rounds > 0 && elapsed < 120,
         fmt("pruning matches brute force in %.0f/%.0f rounds (seed pools <= 20), %.2fs",
             static_cast<double>(rounds - bad), static_cast<double>(rounds), elapsed));
}

void apportionment() {
  const auto start = Clock::now();
  std::mt19937_64 rng(5);
  std::size_t bad = 0;
  long double worst = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t k = 1 + rng() % 12;
    std::vector<std::uint64_t> unions(k);
    std::vector<std::uint64_t> floors(k);
    std::uint64_t floor_sum = 0;
    for (auto& u : unions) u = 1 + rng() % 1000000;
    for (auto& f : floors) floor_sum += (f = 1 + rng() % 2000);
    const std::uint64_t total = floor_sum + rng() % 2000000;
    const auto plan = allocate_sizes(unions, total, floors);
    const auto shares = oracle::shares(unions, total, floors);
    std::uint64_t sum = 0;
    bool ok = true;
    for (std::size_t i = 0; i < k; ++i) {
      sum += plan.cluster_sizes[i];
      if (plan.cluster_sizes[i] < floors[i]) ok = false;
      const long double dev = std::fabs(static_cast<long double>(plan.cluster_sizes[i]) - shares[i]);
      worst = std::max(worst, dev);
      if (dev >= 1.0L) ok = false;
    }
    if (sum != total || !ok) ++bad;
  }
  const double elapsed = seconds_since(start);
  report("5", bad == 0 && elapsed < 10,
         fmt("10000 allocations: exact sums, floors kept, max deviation from shares %.4f, %.2fs",
             static_cast<double>(worst), elapsed));
}

std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> p(n);
  double total = 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& x : p) total += (x = rng() % 4 == 0 ? 0.0 : u(rng));
  if (total == 0.0) p[0] = total = 1.0;
  for (auto& x : p) x /= total;
  return p;
}

void wasserstein_axioms() {
  const auto start = Clock::now();
  std::mt19937_64 rng(6);
  std::size_t bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const auto p = random_distribution(rng, n);
    auto q = random_distribution(rng, n);
    if (trial % 10 == 0) q = p;
    const auto r = random_distribution(rng, n);
    const double pq = wasserstein1(p, q);
    bool ok = pq == wasserstein1(q, p);
    const bool equal = p == q;
    ok = ok && (equal ? pq <= 1e-12 : pq > 1e-12) && wasserstein1(p, p) <= 1e-12;
    ok = ok && wasserstein1(p, r) <= pq + wasserstein1(q, r) + 1e-9;
    ok = ok && std::fabs(pq - oracle::line_transport(p, q)) <= 1e-9;
    if (!ok) ++bad;
  }
  const double elapsed = seconds_since(start);
  report("6", bad == 0 && elapsed < 30,
         fmt("W1 symmetric, zero iff equal, triangle, = transport oracle on %.0f/1000 pairs, %.2fs",
             1000.0 - static_cast<double>(bad), elapsed));
}

void sampling_exactness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(11);
  long double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<std::string, std::size_t>> sizes;
    for (std::size_t i = 0, n = 1 + rng() % 20; i < n; ++i) {
      sizes.emplace_back("l" + std::to_string(i), 1 + rng() % 10000000);
    }
    for (double alpha : {0.3, 0.7, 1.0}) {
      const auto d = sampling_distribution(sizes, alpha);
      long double total = 0;
      for (const auto& [l, n] : sizes) total += n;
      long double norm = 0;
      for (const auto& [l, n] : sizes) norm += std::pow(n / total, static_cast<long double>(alpha));
      for (const auto& [l, n] : sizes) {
        const long double expect = std::pow(n / total, static_cast<long double>(alpha)) / norm;
        worst = std::max(worst, std::fabs(expect - static_cast<long double>(d.weight(l))));
      }
    }
  }
  const double elapsed = seconds_since(start);
  report("11", worst <= 1e-12L && elapsed < 5,
         fmt("sampling distribution vs closed form, max error %.2e over 300 cases, %.3fs",
             static_cast<double>(worst), elapsed));
}

// ---------------------------------------------------------------------------

struct Runs {
  fs::path manifest;
  fs::path joint;      // k = 1, seed 0
  fs::path joint_alt;  // k = 1, seed 1
  fs::path cluster;    // k = 3, seed 0
  fs::path cluster2;   // k = 3, seed 0 again
};

void generalization_identity(const fs::path& dir, Runs& runs) {
  const auto start = Clock::now();
  const bool ok = pipeline(runs.manifest, runs.joint, 1, 0);
  const double elapsed = seconds_since(start);
  const fs::path direct = dir / "direct.vocab";
  const bool trained = cli({"train-lang", "--manifest", runs.manifest.string(), "--total-size",
                            std::to_string(kTotalSize), "--output", direct.string()}) == 0;
  const bool same = ok && trained &&
                    read_file(runs.joint / "final.vocab") == read_file(direct);
  report("1", same && elapsed < 120,
         fmt("k=1 final.vocab byte-identical to joint training at size %.0f; pipeline %.1fs",
             static_cast<double>(kTotalSize), elapsed));
}

void directional(const std::vector<LanguageCorpus>& corpora, const Runs& runs, double elapsed) {
  const auto joint = Vocabulary::load(runs.joint / "final.vocab");
  const auto clustered = Vocabulary::load(runs.cluster / "final.vocab");
  const auto sampling = sampling_distribution(corpora);
  const auto mj = measure(joint, corpora, sampling);
  const auto mc = measure(clustered, corpora, sampling);
  report("7a", mc.description_length <= mj.description_length && elapsed < 600,
         fmt("DL clustered %.3f vs joint %.3f (require <=), runs %.1fs", mc.description_length,
             mj.description_length, elapsed));

  double oov_joint = 0.0;
  double oov_cluster = 0.0;
  for (const auto& l : mj.languages) {
    if (l.language == "zh1") oov_joint = l.oov_rate();
  }
  for (const auto& l : mc.languages) {
    if (l.language == "zh1") oov_cluster = l.oov_rate();
  }
  report("7b", oov_joint > 0.0 && oov_cluster <= 0.5 * oov_joint && elapsed < 600,
         fmt("CJK-like OOV clustered %.4f%% vs joint %.4f%% (require <= 0.5x)",
             100 * oov_cluster, 100 * oov_joint));

  const double fj = script_fraction(joint, ScriptClass::kCjk);
  const double fc = script_fraction(clustered, ScriptClass::kCjk);
  report("8", fc > fj, fmt("CJK piece fraction clustered %.2f%% vs joint %.2f%% (require >)",
                           100 * fc, 100 * fj));
}

void cluster_recovery(const Runs& runs, const std::vector<LanguageCorpus>& corpora) {
  std::vector<Vocabulary> vocabs;
  for (const auto& c : corpora) {
    vocabs.push_back(Vocabulary::load(runs.cluster / "per_lang" / (c.language() + ".vocab")));
  }
  const auto start = Clock::now();
  const Vocabulary global = union_vocab(vocabs);
  std::vector<LanguageVector> vectors;
  for (std::size_t i = 0; i < vocabs.size(); ++i) {
    vectors.push_back(encode_language(corpora[i].language(), vocabs[i], global));
  }
  const std::vector<std::vector<std::string>> truth{{"cy1", "cy2"}, {"la1", "la2", "la3"}, {"zh1"}};
  std::size_t recovered = 0;
  for (long long seed = 0; seed < 10; ++seed) {
    KMeansOptions options;
    options.k = 3;
    options.seed = seed;
    if (kmeans(vectors, options).clusters() == truth) ++recovered;
  }
  const double elapsed = seconds_since(start);
  report("9", recovered == 10 && elapsed < 60,
         fmt("k=3 recovers the 3 script groups for %.0f/10 seeds, %.2fs",
             static_cast<double>(recovered), elapsed));
}

void determinism(const Runs& runs, double elapsed) {
  const auto a = sha256_file(runs.cluster / "final.vocab");
  const auto b = sha256_file(runs.cluster2 / "final.vocab");
  const auto j0 = sha256_file(runs.joint / "final.vocab");
  const auto j1 = sha256_file(runs.joint_alt / "final.vocab");
  const auto yes = [](bool b) { return b ? "identical" : "different"; };
  char buf[256];
  std::snprintf(buf, sizeof buf, "k=3 same seed twice: %s; k=1 seeds 0 and 1: %s; %.1fs", yes(a == b),
                yes(j0 == j1), elapsed);
  report("10", a == b && j0 == j1 && elapsed < 300, buf);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> known_failures;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--known-failure") known_failures.insert(argv[++i]);
  }

  const fs::path dir = fs::temp_directory_path() / ("mvocab-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);

  viterbi_oracle();
  em_monotonicity();
  pruning_oracle();
  apportionment();
  wasserstein_axioms();
  sampling_exactness();

  Runs runs;
  runs.manifest = write_synthetic(dir / "corpus", six_language_preset(10000, 7));
  runs.joint = dir / "joint";
  runs.joint_alt = dir / "joint_seed1";
  runs.cluster = dir / "cluster";
  runs.cluster2 = dir / "cluster_again";
  const auto corpora = load_corpora(load_manifest(runs.manifest));

  generalization_identity(dir, runs);

  auto start = Clock::now();
  const bool clustered_ok = pipeline(runs.manifest, runs.cluster, 3, 0);
  const double cluster_elapsed = seconds_since(start);
  if (clustered_ok) {
    directional(corpora, runs, cluster_elapsed);
    cluster_recovery(runs, corpora);
  } else {
    report("7a", false, "k=3 pipeline failed");
    report("7b", false, "k=3 pipeline failed");
    report("8", false, "k=3 pipeline failed");
    report("9", false, "k=3 pipeline failed");
  }

  start = Clock::now();
  const bool again = pipeline(runs.manifest, runs.cluster2, 3, 0);
  const bool alt = pipeline(runs.manifest, runs.joint_alt, 1, 1);
  const double determinism_elapsed = seconds_since(start);
  if (again && alt && clustered_ok) {
    determinism(runs, determinism_elapsed);
  } else {
    report("10", false, "a pipeline run failed");
  }

  fs::remove_all(dir);

  int unexpected = 0;
  for (const auto& o : outcomes) {
    if (!o.pass && !known_failures.count(o.id)) ++unexpected;
  }
  std::size_t passed = 0;
  for (const auto& o : outcomes) passed += o.pass;
  std::printf("%zu/%zu criteria passed", passed, outcomes.size());
  if (!known_failures.empty()) {
    std::printf("; known failures:");
    for (const auto& k : known_failures) std::printf(" %s", k.c_str());
  }
  std::printf("\n");
  return unexpected == 0 ? 0 : 1;
}
