#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/hgcn.hpp"
#include "kgalign/ingest.hpp"
#include "kgalign/training.hpp"

namespace kgalign {

/// Every knob of a run. Serialized as flat `key = value` text; `#` starts a comment.
struct RunConfig {
  // data
  std::string dataset;
  std::string out = "out";
  std::string word_vectors;  // empty: use the dataset's vectors.txt if present, else random features
  std::size_t feature_dim = 300;
  bool random_features = false;
  double train_fraction = 0.3;
  double validation_fraction = 0.05;
  bool weighted_adjacency = false;
  // model
  std::size_t num_layers = 2;
  std::vector<std::size_t> dims;  // empty: every layer uses feature_dim
  std::size_t relation_dim = 300;
  double gate_bias_init = -1.0;
  bool highway = true;
  bool relu_last_layer = true;
  // training
  TrainConfig train;
  int precision = 32;
  // evaluation
  std::vector<std::size_t> k_list{1, 10};
  CandidatePolicy candidate_policy = CandidatePolicy::TestCounterparts;
  Direction direction = Direction::Forward;
  std::vector<double> sweep_ratios;
  // synthesis
  SyntheticSpec synth;
  // process
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  HgcnConfig hgcn() const {
    HgcnConfig c;
    c.num_layers = num_layers;
    c.dims = dims.empty() ? std::vector<std::size_t>(num_layers + 1, feature_dim) : dims;
    c.relation_dim = relation_dim;
    c.gate_bias_init = gate_bias_init;
    c.highway = highway;
    c.relu_last_layer = relu_last_layer;
    c.rng_seed = derive_seed(seed, "model");
    return c;
  }

  TrainConfig training() const {
    TrainConfig t = train;
    t.rng_seed = derive_seed(seed, "train");
    return t;
  }

  std::uint64_t split_seed() const { return derive_seed(seed, "split"); }
  std::uint64_t feature_seed() const { return derive_seed(seed, "features"); }
};

namespace detail {

template <typename N>
N parse_number(std::string_view key, std::string_view text) {
  N value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  return value;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected a boolean, got '" + std::string(text) + "'");
}

template <typename N>
std::vector<N> parse_list(std::string_view key, std::string_view text) {
  std::vector<N> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(',', start);
    auto item = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(parse_number<N>(key, item));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename N>
std::string join(const std::vector<N>& v) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < v.size(); ++i) ss << (i ? "," : "") << v[i];
  return ss.str();
}

inline std::string num(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

struct KeySpec {
  const char* doc;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define KGALIGN_STR(field, doc)                                                             \
  {#field, {doc, [](RunConfig& c, std::string_view v) { c.field = std::string(v); },       \
            [](const RunConfig& c) { return c.field; }}}
#define KGALIGN_NUM(name, field, type, doc)                                                  \
  {name, {doc, [](RunConfig& c, std::string_view v) { c.field = parse_number<type>(name, v); }, \
          [](const RunConfig& c) { return num(static_cast<double>(c.field)); }}}
#define KGALIGN_BOOL(name, field, doc)                                                       \
  {name, {doc, [](RunConfig& c, std::string_view v) { c.field = parse_bool(name, v); },    \
          [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }}}

inline const std::map<std::string, KeySpec>& key_table() {
  static const std::map<std::string, KeySpec> table = {
      KGALIGN_STR(dataset, "dataset directory in DBP15K layout"),
      KGALIGN_STR(out, "output directory"),
      KGALIGN_STR(word_vectors, "word-vector file for name features (default: <dataset>/vectors.txt)"),
      KGALIGN_NUM("feature_dim", feature_dim, std::size_t, "input feature dimension d(0)"),
      KGALIGN_BOOL("random_features", random_features, "ignore names and draw Gaussian features"),
      KGALIGN_NUM("train_fraction", train_fraction, double, "share of reference pairs used as seeds"),
      KGALIGN_NUM("validation_fraction", validation_fraction, double, "share of the seeds held out for the stage switch"),
      KGALIGN_BOOL("weighted_adjacency", weighted_adjacency, "weight edges by triple count"),
      KGALIGN_NUM("num_layers", num_layers, std::size_t, "number of GCN layers"),
      {"dims", {"comma-separated layer sizes d(0..L) (default: feature_dim everywhere)",
                [](RunConfig& c, std::string_view v) { c.dims = parse_list<std::size_t>("dims", v); },
                [](const RunConfig& c) { return join(c.dims); }}},
      KGALIGN_NUM("relation_dim", relation_dim, std::size_t, "relation vector size m"),
      KGALIGN_NUM("gate_bias_init", gate_bias_init, double, "initial highway gate bias"),
      KGALIGN_BOOL("highway", highway, "enable highway gates"),
      KGALIGN_BOOL("relu_last_layer", relu_last_layer, "apply ReLU on the last layer"),
      KGALIGN_NUM("gamma", train.gamma, double, "margin"),
      KGALIGN_NUM("beta", train.beta, double, "relation seed-overlap weight"),
      KGALIGN_NUM("learning_rate", train.learning_rate, double, "optimizer step size"),
      KGALIGN_NUM("k_neg", train.k_neg, std::size_t, "hard negatives per positive and side"),
      KGALIGN_NUM("resample_interval", train.resample_interval, std::size_t, "epochs between negative re-mining"),
      KGALIGN_NUM("max_epochs", train.max_epochs, std::size_t, "total epochs over both stages"),
      KGALIGN_NUM("pretrain_patience", train.pretrain_patience, std::size_t, "non-improving checks before the stage switch"),
      KGALIGN_NUM("pretrain_max_epochs", train.pretrain_max_epochs, std::size_t, "preliminary epoch cap (0: max_epochs)"),
      KGALIGN_NUM("eval_interval", train.eval_interval, std::size_t, "epochs between validation checks (0: resample_interval)"),
      {"optimizer", {"adam or sgd",
                     [](RunConfig& c, std::string_view v) {
                       if (v == "adam")
                         c.train.optimizer = OptimizerKind::Adam;
                       else if (v == "sgd")
                         c.train.optimizer = OptimizerKind::Sgd;
                       else
                         throw ConfigError("optimizer must be adam or sgd");
                     },
                     [](const RunConfig& c) {
                       return std::string(c.train.optimizer == OptimizerKind::Adam ? "adam" : "sgd");
                     }}},
      {"precision", {"32 or 64 bit training",
                     [](RunConfig& c, std::string_view v) {
                       c.precision = parse_number<int>("precision", v);
                       if (c.precision != 32 && c.precision != 64) throw ConfigError("precision must be 32 or 64");
                     },
                     [](const RunConfig& c) { return std::to_string(c.precision); }}},
      {"k_list", {"Hits@k cut-offs",
                  [](RunConfig& c, std::string_view v) {
                    c.k_list = parse_list<std::size_t>("k_list", v);
                    check_k_list(c.k_list);
                  },
                  [](const RunConfig& c) { return join(c.k_list); }}},
      {"candidate_policy", {"test-counterparts or all-opposite-graph",
                            [](RunConfig& c, std::string_view v) {
                              if (v == "test-counterparts")
                                c.candidate_policy = CandidatePolicy::TestCounterparts;
                              else if (v == "all-opposite-graph")
                                c.candidate_policy = CandidatePolicy::AllOppositeGraph;
                              else
                                throw ConfigError("unknown candidate_policy '" + std::string(v) + "'");
                            },
                            [](const RunConfig& c) { return std::string(to_string(c.candidate_policy)); }}},
      {"direction", {"forward or both",
                     [](RunConfig& c, std::string_view v) {
                       if (v == "forward")
                         c.direction = Direction::Forward;
                       else if (v == "both")
                         c.direction = Direction::Bidirectional;
                       else
                         throw ConfigError("direction must be forward or both");
                     },
                     [](const RunConfig& c) {
                       return std::string(c.direction == Direction::Forward ? "forward" : "both");
                     }}},
      {"sweep_ratios", {"seed ratios for the sweep in eval (empty: no sweep)",
                        [](RunConfig& c, std::string_view v) { c.sweep_ratios = parse_list<double>("sweep_ratios", v); },
                        [](const RunConfig& c) { return join(c.sweep_ratios); }}},
      KGALIGN_NUM("synth_entities", synth.n_entities, std::size_t, "entities per synthetic graph"),
      KGALIGN_NUM("synth_relations", synth.n_relations, std::size_t, "relations per synthetic graph"),
      KGALIGN_NUM("synth_triples", synth.n_triples, std::size_t, "triples per synthetic graph"),
      KGALIGN_NUM("synth_structural_noise", synth.structural_noise, double, "share of rewired triples in G2"),
      KGALIGN_NUM("synth_feature_noise", synth.feature_noise, double, "std-dev of G2 feature noise"),
      KGALIGN_NUM("synth_feature_dim", synth.feature_dim, std::size_t, "synthetic feature dimension"),
      KGALIGN_NUM("seed", seed, std::uint64_t, "root random seed"),
      KGALIGN_NUM("threads", threads, std::size_t, "worker thread cap (0: all cores)"),
  };
  return table;
}

#undef KGALIGN_STR
#undef KGALIGN_NUM
#undef KGALIGN_BOOL

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Sets one key; unknown keys are rejected.
inline void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  const auto& table = detail::key_table();
  const auto it = table.find(std::string(key));
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second.set(config, detail::trim(value));
}

/// Applies `key = value` lines on top of the current values.
inline void apply_config_text(RunConfig& config, std::string_view text, const std::string& origin = "config") {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find('\n', start);
    auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
      try {
        set_config_value(config, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
      } catch (const ConfigError& e) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
}

inline RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(base, ss.str(), path.string());
  return base;
}

/// Writes every key with its current value, preceded by its description.
inline void write_config(std::ostream& out, const RunConfig& config) {
  for (const auto& [key, spec] : detail::key_table()) {
    out << "# " << spec.doc << '\n' << key << " = " << spec.get(config) << '\n';
  }
}

}  // namespace kgalign
