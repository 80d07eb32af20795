#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "kgalign/eval.hpp"
#include "kgalign/graph_prep.hpp"
#include "kgalign/hgcn.hpp"
#include "kgalign/ingest.hpp"
#include "kgalign/relation_rep.hpp"
#include "kgalign/training.hpp"

namespace kgalign {

/// Entity and relation alignment of one parameter set.
struct StageEvaluation {
  AlignmentReport entities;
  std::optional<RelationReport> relations;
};

/// Scores the preliminary stage on X′ and the joint stage on X_joint.
/// Preliminary relation vectors are the untransformed concatenated means
/// (W_R does not exist yet); joint ones go through W_R.
template <typename T>
StageEvaluation evaluate_stage(const MergedGraph& graph, const NormalizedAdjacency<T>& adj,
                               const DenseMatrix<T>& features, const HgcnConfig& hcfg, const ModelParams<T>& params,
                               Stage stage, std::span<const EntityPair> test_pairs,
                               std::span<const EntityPair> train_pairs, const RelationTestSet& relation_tests,
                               double beta, std::span<const std::size_t> k_list,
                               CandidatePolicy policy = CandidatePolicy::TestCounterparts,
                               Direction direction = Direction::Forward) {
  const auto x_prime = hgcn_forward(hcfg, params, features, adj);
  const bool joint = stage == Stage::Joint && params.relation_transform.has_value();
  StageEvaluation out;
  std::optional<DenseMatrix<T>> rel;
  if (joint || !relation_tests.pairs.empty())
    rel = approximate_relations(x_prime, graph, joint ? params.relation_transform : std::nullopt);
  const auto emb = joint ? joint_entities(x_prime, *rel, graph) : x_prime;
  out.entities = align_entities(emb, test_pairs, graph, k_list, policy, direction);
  if (!relation_tests.pairs.empty())
    out.relations = align_relations(*rel, graph, train_pairs, relation_tests, beta, k_list);
  return out;
}

struct ExperimentResult {
  double entity_hits1_pre = 0.0;
  double entity_hits1_joint = 0.0;
  double relation_hits1_pre = 0.0;
  double relation_hits1_joint = 0.0;
  std::size_t switch_epoch = 0;
  std::size_t epochs = 0;
};

/// Trains once and scores both stages on the test split.
template <typename T>
ExperimentResult run_experiment(const Dataset& data, const AlignmentSeeds& seeds, const FeatureTable& features,
                                const HgcnConfig& hcfg, const TrainConfig& tcfg,
                                AdjacencyOptions adjacency = {}) {
  const auto adj = build_adjacency<T>(data.graph, adjacency);
  const auto feats = features.vectors.template cast<T>();
  const auto trained = train(data.graph, adj, feats, seeds, hcfg, tcfg);
  const std::size_t k1[] = {1};
  const auto pre = evaluate_stage(data.graph, adj, feats, hcfg, trained.preliminary, Stage::Preliminary, seeds.test,
                                  seeds.train, data.relation_tests, tcfg.beta, k1);
  const auto joint = evaluate_stage(data.graph, adj, feats, hcfg, trained.params, Stage::Joint, seeds.test,
                                    seeds.train, data.relation_tests, tcfg.beta, k1);
  ExperimentResult r;
  r.entity_hits1_pre = pre.entities.hits.at(1);
  r.entity_hits1_joint = joint.entities.hits.at(1);
  if (pre.relations) r.relation_hits1_pre = pre.relations->hits.at(1);
  if (joint.relations) r.relation_hits1_joint = joint.relations->hits.at(1);
  r.switch_epoch = trained.switch_epoch;
  r.epochs = trained.log.size();
  return r;
}

struct SweepRow {
  double ratio = 0.0;
  double entity_hits1 = 0.0;
  double relation_hits1 = 0.0;
};

/// Retrains from scratch for each seed ratio with the same base seed and
/// reports the joint-stage Hits@1.
template <typename T>
std::vector<SweepRow> seed_ratio_sweep(const Dataset& data, const FeatureTable& features,
                                       std::span<const double> ratios, const HgcnConfig& hcfg,
                                       const TrainConfig& tcfg, std::uint64_t rng_seed,
                                       double validation_fraction = 0.0, AdjacencyOptions adjacency = {}) {
  std::vector<SweepRow> rows;
  for (double ratio : ratios) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("sweep ratios must lie in (0, 1)");
    const auto seeds = split_seeds(data.reference, ratio, rng_seed, validation_fraction);
    const auto r = run_experiment<T>(data, seeds, features, hcfg, tcfg, adjacency);
    rows.push_back({ratio, r.entity_hits1_joint, r.relation_hits1_joint});
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "ratio,entity_hits1,relation_hits1\n";
  for (const auto& r : rows) out << r.ratio << ',' << r.entity_hits1 << ',' << r.relation_hits1 << '\n';
}

}  // namespace kgalign
