#include "mvocab/run_config.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "mvocab/error.hpp"

namespace mvocab {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size()) {
    throw_usage("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "'");
  }
  return out;
}

std::optional<std::size_t> parse_optional_size(std::string_view key, std::string_view value) {
  if (value.empty() || value == "none") return std::nullopt;
  return parse_number<std::size_t>(key, value);
}

std::string format_optional(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : std::string("none");
}

}  // namespace

const std::vector<RunConfig::Key>& RunConfig::schema() {
  static const std::vector<Key> keys{
      {"manifest", "path", "language manifest: '<code> <path> [max_sentences]' per line"},
      {"k", "int>=1", "number of language clusters"},
      {"total_size", "int|none", "vocabulary budget summed over clusters"},
      {"per_language_size", "int>=1", "size of each per-language vocabulary"},
      {"algorithm", "unigram|bpe", "subword model"},
      {"character_coverage", "real in (0,1]", "character mass the alphabet must cover"},
      {"smoothing_exponent", "real in (0,1]", "exponent of the language sampling distribution"},
      {"seed", "int", "seed for clustering and sampling"},
      {"out", "path", "run directory"},
      {"target_final_size", "int|none", "inflate the budget until the final union reaches this"},
      {"cluster_sentences", "int|none", "per-cluster sentence budget; none pools everything"},
      {"seed_size", "int>=1", "seed substrings kept before pruning"},
      {"max_piece_length", "int>=1", "longest piece in characters"},
      {"em_iterations", "int>=1", "EM iterations per pruning round"},
      {"prune_fraction", "real in (0,1)", "fraction of pieces dropped per pruning round"},
  };
  return keys;
}

void RunConfig::validate(bool require_run) const {
  if (k == 0) throw_usage("k must be at least 1");
  if (total_size && *total_size == 0) throw_usage("total_size must be positive");
  if (total_size && *total_size < k) {
    throw_usage("total_size " + std::to_string(*total_size) + " is below k = " + std::to_string(k));
  }
  if (per_language_size == 0) throw_usage("per_language_size must be positive");
  if (!(smoothing_exponent > 0.0 && smoothing_exponent <= 1.0)) {
    throw_usage("smoothing_exponent must be in (0, 1]");
  }
  if (target_final_size && *target_final_size == 0) {
    throw_usage("target_final_size must be positive");
  }
  if (cluster_sentences && *cluster_sentences == 0) {
    throw_usage("cluster_sentences must be positive");
  }
  trainer(per_language_size).validate();
  if (require_run) {
    if (manifest.empty()) throw_usage("no manifest given");
    if (!total_size && !target_final_size) throw_usage("no total_size given");
    if (out.empty()) throw_usage("no output directory given");
  }
}

TrainerConfig RunConfig::trainer(std::size_t target_size) const {
  TrainerConfig t;
  t.target_size = target_size;
  t.algorithm = algorithm;
  t.character_coverage = character_coverage;
  t.seed_size = seed_size;
  t.max_piece_length = max_piece_length;
  t.em_iterations_per_round = em_iterations;
  t.prune_fraction = prune_fraction;
  return t;
}

std::string RunConfig::get(std::string_view key) const {
  if (key == "manifest") return manifest.string();
  if (key == "k") return std::to_string(k);
  if (key == "total_size") return format_optional(total_size);
  if (key == "per_language_size") return std::to_string(per_language_size);
  if (key == "algorithm") return std::string(to_string(algorithm));
  if (key == "character_coverage") return format_double(character_coverage);
  if (key == "smoothing_exponent") return format_double(smoothing_exponent);
  if (key == "seed") return std::to_string(seed);
  if (key == "out") return out.string();
  if (key == "target_final_size") return format_optional(target_final_size);
  if (key == "cluster_sentences") return format_optional(cluster_sentences);
  if (key == "seed_size") return std::to_string(seed_size);
  if (key == "max_piece_length") return std::to_string(max_piece_length);
  if (key == "em_iterations") return std::to_string(em_iterations);
  if (key == "prune_fraction") return format_double(prune_fraction);
  throw_usage("unknown config key '" + std::string(key) + "'");
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (key == "manifest") {
    manifest = std::string(value);
  } else if (key == "k") {
    k = parse_number<std::size_t>(key, value);
  } else if (key == "total_size") {
    total_size = parse_optional_size(key, value);
  } else if (key == "per_language_size") {
    per_language_size = parse_number<std::size_t>(key, value);
  } else if (key == "algorithm") {
    algorithm = parse_algorithm(value);
  } else if (key == "character_coverage") {
    character_coverage = parse_number<double>(key, value);
  } else if (key == "smoothing_exponent") {
    smoothing_exponent = parse_number<double>(key, value);
  } else if (key == "seed") {
    seed = parse_number<long long>(key, value);
  } else if (key == "out") {
    out = std::string(value);
  } else if (key == "target_final_size") {
    target_final_size = parse_optional_size(key, value);
  } else if (key == "cluster_sentences") {
    cluster_sentences = parse_optional_size(key, value);
  } else if (key == "seed_size") {
    seed_size = parse_number<std::size_t>(key, value);
  } else if (key == "max_piece_length") {
    max_piece_length = parse_number<std::size_t>(key, value);
  } else if (key == "em_iterations") {
    em_iterations = parse_number<std::size_t>(key, value);
  } else if (key == "prune_fraction") {
    prune_fraction = parse_number<double>(key, value);
  } else {
    throw_usage("unknown config key '" + std::string(key) + "'");
  }
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  for (const auto& key : schema()) {
    out << key.name << " = " << get(key.name) << "\n";
  }
  return out.str();
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw_usage("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.insert(std::string(key)).second) {
      throw_usage("config line " + std::to_string(line_no) + ": duplicate key '" +
                  std::string(key) + "'");
    }
    try {
      config.set(key, value);
    } catch (const Error& e) {
      throw_usage("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

void RunConfig::save(const std::filesystem::path& path) const {
  write_file_atomic(path, serialize());
}

}  // namespace mvocab
