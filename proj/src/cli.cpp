#include "mvocab/cli.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mvocab/analysis.hpp"
#include "mvocab/clustering.hpp"
#include "mvocab/corpus.hpp"
#include "mvocab/error.hpp"
#include "mvocab/hash.hpp"
#include "mvocab/pipeline.hpp"
#include "mvocab/run_config.hpp"
#include "mvocab/segmentation.hpp"
#include "mvocab/synthetic.hpp"
#include "mvocab/trainer.hpp"
#include "mvocab/utf8.hpp"

namespace mvocab {

namespace {

namespace fs = std::filesystem;

// Flags shared by the config-driven subcommands. Each value is applied over
// the config file only when given on the command line.
struct ConfigFlags {
  std::string config_path;
  std::string manifest;
  std::size_t k = 8;
  std::size_t total_size = 0;
  std::size_t per_lang_size = 32000;
  std::string algorithm = "unigram";
  double coverage = kDefaultCharacterCoverage;
  double alpha = kDefaultSmoothingExponent;
  long long seed = 0;
  std::string out = "run";
  std::size_t target_final_size = 0;
  std::size_t cluster_sentences = 0;

  std::vector<std::pair<CLI::Option*, std::string>> bound;

  void add(CLI::App* app) {
    auto bind = [&](CLI::Option* opt, std::string key) { bound.emplace_back(opt, std::move(key)); };
    app->add_option("--config", config_path, "key = value run configuration file");
    bind(app->add_option("--manifest", manifest, "language manifest"), "manifest");
    bind(app->add_option("--k", k, "number of language clusters"), "k");
    bind(app->add_option("--total-size", total_size, "vocabulary budget summed over clusters"),
         "total_size");
    bind(app->add_option("--per-lang-size", per_lang_size, "per-language vocabulary size"),
         "per_language_size");
    bind(app->add_option("--algorithm", algorithm, "subword model")
             ->check(CLI::IsMember({"unigram", "bpe"})),
         "algorithm");
    bind(app->add_option("--coverage", coverage, "character coverage"), "character_coverage");
    bind(app->add_option("--alpha", alpha, "sampling smoothing exponent"), "smoothing_exponent");
    bind(app->add_option("--seed", seed, "seed for clustering and sampling"), "seed");
    bind(app->add_option("--out", out, "run directory"), "out");
    bind(app->add_option("--target-final-size", target_final_size,
                         "grow the budget until the final vocabulary reaches this size (0: off)"),
         "target_final_size");
    bind(app->add_option("--cluster-sentences", cluster_sentences,
                         "per-cluster sentence budget (0: pool everything)"),
         "cluster_sentences");
  }

  RunConfig resolve() const {
    RunConfig config = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    for (const auto& [opt, key] : bound) {
      if (opt->count() == 0) continue;
      std::string value = opt->as<std::string>();
      if ((key == "total_size" || key == "target_final_size" || key == "cluster_sentences") &&
          value == "0") {
        value = "none";
      }
      config.set(key, value);
    }
    return config;
  }
};

std::vector<LanguageCorpus> corpora_from(const std::string& manifest) {
  if (manifest.empty()) throw_usage("--manifest is required");
  return load_corpora(load_manifest(manifest));
}

int cmd_train_lang(const ConfigFlags& flags, const std::string& lang, const std::string& output,
                   std::ostream& out) {
  const RunConfig config = flags.resolve();
  config.validate();
  const auto corpora = corpora_from(config.manifest.string());
  LanguageCorpus corpus;
  if (lang.empty()) {
    corpus = joint_corpus(corpora);
  } else {
    const auto it = std::find_if(corpora.begin(), corpora.end(),
                                 [&](const auto& c) { return c.language() == lang; });
    if (it == corpora.end()) throw_usage("language '" + lang + "' is not in the manifest");
    corpus = *it;
  }
  const std::size_t size = lang.empty() ? config.total_size.value_or(config.per_language_size)
                                        : config.per_language_size;
  const Vocabulary vocab = train_vocabulary(corpus, config.trainer(size));
  const fs::path path = output.empty() ? fs::path((lang.empty() ? "joint" : lang) + ".vocab")
                                       : fs::path(output);
  vocab.save(path);
  out << path.string() << "\t" << vocab.size() << "\t" << sha256_file(path) << "\n";
  return 0;
}

int cmd_pipeline(const ConfigFlags& flags, std::size_t jobs, bool resume, bool print_config,
                 std::ostream& out, std::ostream& err) {
  const RunConfig config = flags.resolve();
  if (print_config) {
    config.validate();
    out << config.serialize();
    return 0;
  }
  PipelineOptions options;
  options.jobs = jobs;
  options.resume = resume;
  options.log = &err;
  const auto run = run_pipeline(config, options);
  out << (config.out / "final.vocab").string() << "\t" << run.final_vocab.size() << "\t"
      << run.artifacts.at("final.vocab") << "\n";
  return 0;
}

int cmd_encode(const std::string& vocab_path, bool report_oov, std::istream& in,
               std::ostream& out) {
  const Vocabulary vocab = Vocabulary::load(vocab_path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!utf8::is_valid(line)) throw_io("stdin: invalid UTF-8");
    const auto seg = encode_text(vocab, line);
    for (std::size_t i = 0; i < seg.pieces.size(); ++i) {
      if (i) out << ' ';
      out << seg.pieces[i];
    }
    if (report_oov) out << '\t' << seg.oov_count;
    out << '\n';
  }
  return 0;
}

int cmd_analyze(const std::string& vocab_path, const ConfigFlags& flags, std::size_t jobs,
                bool json, std::ostream& out) {
  const RunConfig config = flags.resolve();
  const auto corpora = corpora_from(config.manifest.string());
  const auto sampling = sampling_distribution(corpora, config.smoothing_exponent);
  const auto report = analyze(Vocabulary::load(vocab_path), corpora, sampling, jobs);
  out << (json ? report.to_json() : report.to_text());
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const ConfigFlags& flags,
                std::size_t jobs, bool json, std::ostream& out) {
  const RunConfig config = flags.resolve();
  const auto corpora = corpora_from(config.manifest.string());
  const auto sampling = sampling_distribution(corpora, config.smoothing_exponent);
  const auto report =
      compare(Vocabulary::load(a), Vocabulary::load(b), corpora, sampling, jobs);
  out << (json ? report.to_json() : report.to_text());
  return 0;
}

int cmd_cluster(const std::vector<std::string>& vocab_paths, std::size_t k, long long seed,
                const std::string& output, std::ostream& out) {
  if (vocab_paths.empty()) throw_usage("cluster needs per-language vocabulary files");
  if (k == 0) throw_usage("k must be at least 1");
  std::vector<Vocabulary> vocabs;
  std::vector<std::string> languages;
  for (const auto& p : vocab_paths) {
    vocabs.push_back(Vocabulary::load(p));
    languages.push_back(fs::path(p).stem().string());
  }
  const Vocabulary global = union_vocab(vocabs);
  std::vector<LanguageVector> vectors;
  for (std::size_t i = 0; i < vocabs.size(); ++i) {
    vectors.push_back(encode_language(languages[i], vocabs[i], global));
  }
  KMeansOptions options;
  options.k = k;
  options.seed = seed;
  const std::string json = kmeans(vectors, options).to_json();
  if (output.empty()) {
    out << json;
  } else {
    write_file_atomic(output, json);
  }
  return 0;
}

int cmd_synth(const std::string& dir, const std::string& preset, std::size_t sentences,
              std::uint64_t seed, std::ostream& out) {
  SyntheticOptions options;
  if (preset == "six") {
    options = six_language_preset(sentences, seed);
  } else if (preset == "latin-cjk") {
    options = latin_cjk_preset(sentences, seed);
  } else {
    throw_usage("unknown preset '" + preset + "'");
  }
  out << write_synthetic(dir, options).string() << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Multilingual subword vocabularies by language clustering", "mvocab"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  std::size_t jobs = 1;
  std::string output;
  std::string lang;
  std::string vocab_path;
  bool json = false;

  auto* train = app.add_subcommand("train-lang", "train one language's vocabulary");
  ConfigFlags train_flags;
  train_flags.add(train);
  train->add_option("--lang", lang, "language code; empty trains jointly on all languages");
  train->add_option("--output", output, "vocabulary file (default <lang>.vocab)");

  auto* pipe = app.add_subcommand("pipeline", "run the full clustering pipeline");
  ConfigFlags pipe_flags;
  pipe_flags.add(pipe);
  bool resume = false;
  bool print_config = false;
  pipe->add_option("--jobs", jobs, "parallel workers");
  pipe->add_flag("--resume", resume, "reuse vocabularies whose inputs are unchanged");
  pipe->add_flag("--print-config", print_config, "print the resolved configuration and exit");

  auto* enc = app.add_subcommand("encode", "segment stdin, one sentence per line");
  enc->add_option("--vocab", vocab_path, "vocabulary file")->required();
  bool report_oov = false;
  enc->add_flag("--report-oov", report_oov, "append a tab and the line's UNK count");

  auto* ana = app.add_subcommand("analyze", "intrinsic metrics of a vocabulary");
  ConfigFlags ana_flags;
  ana_flags.add(ana);
  ana->add_option("--vocab", vocab_path, "vocabulary file")->required();
  ana->add_option("--jobs", jobs, "parallel workers");
  ana->add_flag("--json", json, "JSON instead of a table");

  auto* cmp = app.add_subcommand("compare", "metrics of two vocabularies side by side");
  ConfigFlags cmp_flags;
  cmp_flags.add(cmp);
  std::string vocab_a;
  std::string vocab_b;
  cmp->add_option("--vocab-a", vocab_a, "baseline vocabulary")->required();
  cmp->add_option("--vocab-b", vocab_b, "candidate vocabulary")->required();
  cmp->add_option("--jobs", jobs, "parallel workers");
  cmp->add_flag("--json", json, "JSON instead of a table");

  auto* clu = app.add_subcommand("cluster", "cluster languages by vocabulary overlap");
  std::vector<std::string> vocab_files;
  std::size_t k = 8;
  long long seed = 0;
  clu->add_option("vocabs", vocab_files, "per-language vocabularies, named <code>.vocab")
      ->required();
  clu->add_option("--k", k, "number of clusters");
  clu->add_option("--seed", seed, "k-means seed");
  clu->add_option("--output", output, "write clusters JSON here instead of stdout");

  auto* syn = app.add_subcommand("synth", "write a synthetic multilingual corpus");
  std::string synth_dir = "synthetic";
  std::string preset = "six";
  std::size_t sentences = 10000;
  std::uint64_t synth_seed = 7;
  syn->add_option("--out", synth_dir, "output directory");
  syn->add_option("--preset", preset, "six | latin-cjk")
      ->check(CLI::IsMember({"six", "latin-cjk"}));
  syn->add_option("--sentences", sentences, "sentences per language");
  syn->add_option("--seed", synth_seed, "generator seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::kUsage);
  }

  try {
    if (train->parsed()) return cmd_train_lang(train_flags, lang, output, out);
    if (pipe->parsed()) return cmd_pipeline(pipe_flags, jobs, resume, print_config, out, err);
    if (enc->parsed()) return cmd_encode(vocab_path, report_oov, in, out);
    if (ana->parsed()) return cmd_analyze(vocab_path, ana_flags, jobs, json, out);
    if (cmp->parsed()) return cmd_compare(vocab_a, vocab_b, cmp_flags, jobs, json, out);
    if (clu->parsed()) return cmd_cluster(vocab_files, k, seed, output, out);
    if (syn->parsed()) return cmd_synth(synth_dir, preset, sentences, synth_seed, out);
  } catch (const Error& e) {
    err << "mvocab: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "mvocab: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kIo);
  } catch (const std::exception& e) {
    err << "mvocab: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kTraining);
  }
  return static_cast<int>(ErrorKind::kUsage);
}

}  // namespace mvocab
