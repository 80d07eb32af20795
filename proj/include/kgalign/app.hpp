#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kgalign/checkpoint.hpp"
#include "kgalign/config.hpp"
#include "kgalign/error.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/graph_prep.hpp"
#include "kgalign/ingest.hpp"
#include "kgalign/parallel.hpp"
#include "kgalign/pipeline.hpp"
#include "kgalign/training.hpp"

namespace kgalign::app {

namespace fs = std::filesystem;

// Files a run directory holds. `train` writes them, `align` and `eval` read them.
namespace files {
inline constexpr const char* kConfig = "config.txt";
inline constexpr const char* kSplit[3] = {"split_train", "split_valid", "split_test"};
inline constexpr const char* kLog = "train_log.tsv";
inline constexpr const char* kCheckpointLatest = "checkpoint_latest.txt";
inline constexpr const char* kCheckpointPre = "checkpoint_pre.txt";
inline constexpr const char* kCheckpointFinal = "checkpoint_final.txt";
inline constexpr const char* kEmbeddings = "embeddings.tsv";
inline constexpr const char* kEntityAlignment = "entity_alignment.tsv";
inline constexpr const char* kRelationAlignment = "relation_alignment.tsv";
inline constexpr const char* kAlignSummary = "align_summary.txt";
inline constexpr const char* kHits = "hits.txt";
inline constexpr const char* kDiagnostics = "diagnostics.tsv";
inline constexpr const char* kSweep = "sweep.csv";
inline constexpr const char* kStats = "stats.txt";
}  // namespace files

/// Raw command-line values; unset optionals leave the config untouched.
struct Flags {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;
  std::optional<std::string> dataset;
  std::optional<std::string> checkpoint;
  std::vector<double> sweep;
  // synth
  std::optional<std::size_t> entities, relations, triples, feature_dim;
  std::optional<double> structural_noise, feature_noise;
};

/// Defaults, then the config file, then `--set` pairs, then dedicated flags.
inline RunConfig resolve_config(const Flags& f) {
  RunConfig c;
  if (!f.config_path.empty()) c = load_config_file(f.config_path);
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + kv + "'");
    set_config_value(c, kgalign::detail::trim(std::string_view(kv).substr(0, eq)), std::string_view(kv).substr(eq + 1));
  }
  if (f.seed) c.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (f.out) c.out = *f.out;
  if (f.dataset) c.dataset = *f.dataset;
  if (!f.sweep.empty()) c.sweep_ratios = f.sweep;
  if (f.entities) c.synth.n_entities = *f.entities;
  if (f.relations) c.synth.n_relations = *f.relations;
  if (f.triples) c.synth.n_triples = *f.triples;
  if (f.feature_dim) c.synth.feature_dim = *f.feature_dim;
  if (f.structural_noise) c.synth.structural_noise = *f.structural_noise;
  if (f.feature_noise) c.synth.feature_noise = *f.feature_noise;
  set_max_threads(c.threads);
  return c;
}

namespace detail {

inline void require_dataset(const RunConfig& c) {
  if (c.dataset.empty()) throw ArgumentError("no dataset given (--dataset or dataset = ...)");
}

inline std::ofstream create(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline void write_pairs(const fs::path& path, const MergedGraph& graph, const std::vector<EntityPair>& pairs) {
  auto out = create(path);
  for (const auto& p : pairs)
    out << graph.local_entity(p.source).second << '\t' << graph.local_entity(p.target).second << '\n';
}

inline FeatureTable load_features(const RunConfig& c, const Dataset& data) {
  if (c.random_features) return random_features(data.graph, c.feature_dim, c.feature_seed());
  fs::path vectors = c.word_vectors;
  if (vectors.empty()) {
    vectors = fs::path(c.dataset) / layout::kVectors;
    if (!fs::exists(vectors)) {
      log_warn("no word vectors found; using random features");
      return random_features(data.graph, c.feature_dim, c.feature_seed());
    }
  }
  return build_features(data.graph, data.names, vectors, c.feature_dim, c.feature_seed());
}

inline AlignmentSeeds make_split(const RunConfig& c, const Dataset& data) {
  return split_seeds(data.reference, c.train_fraction, c.split_seed(), c.validation_fraction);
}

template <typename T>
void write_embeddings(const fs::path& path, const MergedGraph& graph, const DenseMatrix<T>& emb) {
  auto out = create(path);
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    const auto [label, local] = graph.local_entity(static_cast<EntityId>(i));
    out << to_string(label) << '\t' << local;
    for (T v : emb.row(i)) out << '\t' << kgalign::detail::format_real(v);
    out << '\n';
  }
}

inline void write_log(std::ostream& out, const std::vector<EpochRecord>& log) {
  out << "epoch\tstage\tloss\tval_hits1\twall_ms\n";
  for (const auto& r : log) {
    out << r.epoch << '\t' << to_string(r.stage) << '\t' << std::setprecision(9) << r.loss << '\t';
    if (r.val_hits1)
      out << *r.val_hits1;
    else
      out << '-';
    out << '\t' << std::fixed << std::setprecision(1) << r.wall_ms << std::defaultfloat << '\n';
  }
}

/// Everything a command needs besides its own arguments, loaded before any output is written.
template <typename T>
struct Session {
  Dataset data;
  AlignmentSeeds seeds;
  DenseMatrix<T> features;
  NormalizedAdjacency<T> adj;
};

template <typename T>
Session<T> open_session(const RunConfig& c) {
  require_dataset(c);
  Session<T> s;
  s.data = load_dbp15k(c.dataset);
  s.seeds = make_split(c, s.data);
  s.features = load_features(c, s.data).vectors.template cast<T>();
  s.adj = build_adjacency<T>(s.data.graph, AdjacencyOptions{c.weighted_adjacency});
  return s;
}

template <typename T>
int train_as(const RunConfig& c, std::ostream& out) {
  const auto hcfg = c.hgcn();
  const auto tcfg = c.training();
  hcfg.validate();
  tcfg.validate();
  auto session = open_session<T>(c);

  const fs::path dir = c.out;
  fs::create_directories(dir);
  {
    auto cfg = create(dir / files::kConfig);
    write_config(cfg, c);
  }
  for (int i = 0; i < 3; ++i) {
    const auto& part = i == 0 ? session.seeds.train : i == 1 ? session.seeds.validation : session.seeds.test;
    write_pairs(dir / files::kSplit[i], session.data.graph, part);
  }

  TrainHooks<T> hooks;
  hooks.on_checkpoint = [&](const Checkpoint<T>& ck) { save_checkpoint(dir / files::kCheckpointLatest, ck); };
  const auto result = train(session.data.graph, session.adj, session.features, session.seeds, hcfg, tcfg, hooks);

  save_checkpoint(dir / files::kCheckpointPre,
                  Checkpoint<T>{hcfg, result.preliminary, Stage::Preliminary, result.switch_epoch, hcfg.rng_seed});
  const Stage final_stage = result.params.relation_transform ? Stage::Joint : Stage::Preliminary;
  save_checkpoint(dir / files::kCheckpointFinal,
                  Checkpoint<T>{hcfg, result.params, final_stage, result.log.size(), hcfg.rng_seed});
  {
    auto log = create(dir / files::kLog);
    write_log(log, result.log);
  }
  write_embeddings(dir / files::kEmbeddings, session.data.graph,
                   stage_embeddings(hcfg, result.params, session.features, session.adj, session.data.graph,
                                    final_stage));

  out << "epochs = " << result.log.size() << '\n';
  out << "switch_epoch = " << result.switch_epoch << '\n';
  if (!result.log.empty()) out << "final_loss = " << std::setprecision(9) << result.log.back().loss << '\n';
  return 0;
}

inline fs::path checkpoint_path(const RunConfig& c, const std::optional<std::string>& flag) {
  return flag ? fs::path(*flag) : fs::path(c.out) / files::kCheckpointFinal;
}

template <typename T>
int align_as(const RunConfig& c, const fs::path& ckpt_path, std::ostream& out) {
  const auto ckpt = load_checkpoint<T>(ckpt_path);
  const auto session = open_session<T>(c);
  const auto eval = evaluate_stage(session.data.graph, session.adj, session.features, ckpt.config, ckpt.params,
                                   ckpt.stage, session.seeds.test, session.seeds.train, session.data.relation_tests,
                                   c.train.beta, c.k_list, c.candidate_policy, c.direction);
  const fs::path dir = c.out;
  fs::create_directories(dir);
  {
    auto f = create(dir / files::kEntityAlignment);
    write_entity_report(f, eval.entities, session.data.graph);
  }
  if (eval.relations) {
    auto f = create(dir / files::kRelationAlignment);
    write_relation_predictions(f, *eval.relations, session.data.graph);
  }
  std::ostringstream summary;
  summary << "stage = " << to_string(ckpt.stage) << '\n';
  write_hits_summary(summary, "entity", eval.entities.hits, session.seeds.test.size());
  if (eval.relations)
    write_hits_summary(summary, "relation", eval.relations->hits, session.data.relation_tests.pairs.size());
  create(dir / files::kAlignSummary) << summary.str();
  out << summary.str();
  return 0;
}

template <typename T>
int eval_as(const RunConfig& c, const fs::path& ckpt_path, std::ostream& out) {
  const auto final_ckpt = load_checkpoint<T>(ckpt_path);
  const auto pre_path = ckpt_path.parent_path() / files::kCheckpointPre;
  const auto pre_ckpt = load_checkpoint<T>(pre_path);
  if (!(pre_ckpt.config == final_ckpt.config))
    throw ConfigError(pre_path.string() + " and " + ckpt_path.string() + " disagree on the model config");
  const auto s = open_session<T>(c);

  auto score = [&](const Checkpoint<T>& ck) {
    return evaluate_stage(s.data.graph, s.adj, s.features, ck.config, ck.params, ck.stage, s.seeds.test, s.seeds.train,
                          s.data.relation_tests, c.train.beta, c.k_list, c.candidate_policy, c.direction);
  };
  const auto pre = score(pre_ckpt);
  const auto joint = score(final_ckpt);

  std::vector<SweepRow> sweep;
  if (!c.sweep_ratios.empty()) {
    FeatureTable table;
    table.dim = s.features.cols();
    table.vectors = s.features.template cast<double>();
    sweep = seed_ratio_sweep<T>(s.data, table, c.sweep_ratios, c.hgcn(), c.training(), c.split_seed(),
                                c.validation_fraction, AdjacencyOptions{c.weighted_adjacency});
  }

  std::ostringstream hits;
  hits << "direction = " << to_string(c.direction) << '\n';
  hits << "candidates = " << to_string(c.candidate_policy) << '\n';
  write_hits_summary(hits, "entity.pre", pre.entities.hits, s.seeds.test.size());
  write_hits_summary(hits, "entity.joint", joint.entities.hits, s.seeds.test.size());
  if (pre.relations && joint.relations) {
    write_hits_summary(hits, "relation.pre", pre.relations->hits, s.data.relation_tests.pairs.size());
    write_hits_summary(hits, "relation.joint", joint.relations->hits, s.data.relation_tests.pairs.size());
  }

  const fs::path dir = c.out;
  fs::create_directories(dir);
  create(dir / files::kHits) << hits.str();
  {
    const auto diag = alignment_statistics(s.data.graph, pre.entities, joint.entities, s.seeds.train,
                                           pre.relations ? &*pre.relations : nullptr,
                                           joint.relations ? &*joint.relations : nullptr);
    auto f = create(dir / files::kDiagnostics);
    write_diagnostics(f, diag);
  }
  if (!sweep.empty()) {
    auto f = create(dir / files::kSweep);
    write_sweep_csv(f, sweep);
  }
  out << hits.str();
  return 0;
}

template <typename Fn>
int by_precision(const RunConfig& c, Fn&& fn) {
  return c.precision == 64 ? fn(double{}) : fn(float{});
}

}  // namespace detail

/// Loads, validates and re-emits a dataset, plus per-graph counts.
inline int cmd_prepare(const RunConfig& c, std::ostream& out) {
  detail::require_dataset(c);
  const auto data = load_dbp15k(c.dataset);
  const fs::path dir = c.out;
  if (fs::exists(dir) && fs::equivalent(dir, c.dataset))
    throw ArgumentError("--out must differ from the dataset directory");
  fs::create_directories(dir);
  write_dbp15k(dir, data.graph, data.reference, data.relation_tests);
  std::ostringstream stats;
  for (const auto label : {GraphLabel::G1, GraphLabel::G2}) {
    const auto& g = data.graph.graph(label);
    const std::string p = label == GraphLabel::G1 ? "g1" : "g2";
    stats << p << ".entities = " << g.num_entities() << '\n';
    stats << p << ".relations = " << g.num_relations() << '\n';
    stats << p << ".triples = " << g.triples().size() << '\n';
  }
  stats << "reference_pairs = " << data.reference.size() << '\n';
  stats << "relation_test_pairs = " << data.relation_tests.pairs.size() << '\n';
  detail::create(dir / files::kStats) << stats.str();
  out << stats.str();
  return 0;
}

inline int cmd_synth(const RunConfig& c, std::ostream& out) {
  SyntheticSpec spec = c.synth;
  spec.seed_fraction = c.train_fraction;
  spec.validation_fraction = c.validation_fraction;
  spec.rng_seed = derive_seed(c.seed, "synth");
  const auto ds = generate_synthetic(spec);
  fs::create_directories(c.out);
  write_synthetic(c.out, ds);
  out << "entities = " << spec.n_entities << '\n';
  out << "relations = " << spec.n_relations << '\n';
  out << "triples = " << spec.n_triples << '\n';
  out << "rewired = " << ds.rewired << '\n';
  out << "feature_dim = " << spec.feature_dim << '\n';
  return 0;
}

inline int cmd_train(const RunConfig& c, std::ostream& out) {
  return detail::by_precision(c, [&](auto tag) { return detail::train_as<decltype(tag)>(c, out); });
}

inline int cmd_align(const RunConfig& c, const std::optional<std::string>& checkpoint, std::ostream& out) {
  const auto path = detail::checkpoint_path(c, checkpoint);
  return detail::by_precision(c, [&](auto tag) { return detail::align_as<decltype(tag)>(c, path, out); });
}

inline int cmd_eval(const RunConfig& c, const std::optional<std::string>& checkpoint, std::ostream& out) {
  const auto path = detail::checkpoint_path(c, checkpoint);
  return detail::by_precision(c, [&](auto tag) { return detail::eval_as<decltype(tag)>(c, path, out); });
}

/// Entry point. Errors print one line, `error: <CODE>: <message>`, and map to the code's exit status.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App cli{"Entity and relation alignment across two knowledge graphs"};
  cli.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "key = value config file");
    sub->add_option("--set", flags.overrides, "override one config key (key=value), repeatable");
    sub->add_option("--seed", flags.seed, "root random seed");
    sub->add_option("--threads", flags.threads, "worker thread cap (0: all cores)");
    sub->add_option("--out", flags.out, "output directory");
  };
  auto with_dataset = [&](CLI::App* sub) { sub->add_option("--dataset", flags.dataset, "DBP15K-layout directory"); };
  auto with_checkpoint = [&](CLI::App* sub) {
    sub->add_option("--checkpoint", flags.checkpoint, "checkpoint file (default: <out>/checkpoint_final.txt)");
  };

  auto* prepare = cli.add_subcommand("prepare", "validate a dataset and write a normalized copy with stats");
  common(prepare);
  with_dataset(prepare);
  auto* synth = cli.add_subcommand("synth", "generate a synthetic graph pair in DBP15K layout");
  common(synth);
  synth->add_option("--entities", flags.entities, "entities per graph");
  synth->add_option("--relations", flags.relations, "relations per graph");
  synth->add_option("--triples", flags.triples, "triples per graph");
  synth->add_option("--structural-noise", flags.structural_noise, "share of rewired triples");
  synth->add_option("--feature-noise", flags.feature_noise, "std-dev of feature noise");
  synth->add_option("--feature-dim", flags.feature_dim, "feature dimension");
  auto* train_cmd = cli.add_subcommand("train", "two-stage training; writes checkpoints, log and embeddings");
  common(train_cmd);
  with_dataset(train_cmd);
  auto* align = cli.add_subcommand("align", "entity and relation alignment reports from a checkpoint");
  common(align);
  with_dataset(align);
  with_checkpoint(align);
  auto* eval = cli.add_subcommand("eval", "Hits@k for both stages, diagnostics, optional seed-ratio sweep");
  common(eval);
  with_dataset(eval);
  with_checkpoint(eval);
  eval->add_option("--sweep", flags.sweep, "seed ratios to retrain and score")->delimiter(',');

  auto fail = [&](ErrorCode code, const std::string& message) {
    std::string line = message;
    for (auto& ch : line)
      if (ch == '\n') ch = ' ';
    err << "error: " << error_code_name(code) << ": " << line << '\n';
    return static_cast<int>(code);
  };

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << cli.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << cli.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(ErrorCode::Argument, e.what());
  }

  try {
    const RunConfig config = resolve_config(flags);
    if (*prepare) return cmd_prepare(config, out);
    if (*synth) return cmd_synth(config, out);
    if (*train_cmd) return cmd_train(config, out);
    if (*align) return cmd_align(config, flags.checkpoint, out);
    return cmd_eval(config, flags.checkpoint, out);
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(ErrorCode::Io, e.what());
  } catch (const std::exception& e) {
    return fail(ErrorCode::Internal, e.what());
  }
}

}  // namespace kgalign::app
