#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/checkpoint.hpp"
#include "kgalign/error.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/graph_prep.hpp"
#include "kgalign/hgcn.hpp"
#include "kgalign/kg_core.hpp"
#include "kgalign/log.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/parallel.hpp"
#include "kgalign/relation_rep.hpp"
#include "kgalign/tape.hpp"

namespace kgalign {

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
  double gamma = 1.0;
  double beta = 20.0;
  double learning_rate = 0.001;
  std::size_t k_neg = 125;
  /// T: negatives are re-mined every T epochs.
  std::size_t resample_interval = 50;
  /// N: total epoch budget over both stages.
  std::size_t max_epochs = 1000;
  /// Stage switch after this many consecutive non-improving validation checks.
  std::size_t pretrain_patience = 3;
  /// Hard cap on preliminary epochs; 0 means max_epochs.
  std::size_t pretrain_max_epochs = 0;
  /// Epochs between validation checks; 0 means resample_interval.
  std::size_t eval_interval = 0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t rng_seed = 0;

  std::size_t effective_eval_interval() const { return eval_interval ? eval_interval : resample_interval; }
  std::size_t effective_pretrain_cap() const { return pretrain_max_epochs ? pretrain_max_epochs : max_epochs; }

  void validate() const {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
    if (k_neg < 1) throw ConfigError("k_neg must be at least 1");
    if (resample_interval < 1) throw ConfigError("resample_interval must be at least 1");
    if (pretrain_patience < 1) throw ConfigError("pretrain_patience must be at least 1");
  }
};

/// Negatives for every positive pair; owner[j] indexes the positive that pairs[j] contrasts with.
struct NegativeSet {
  std::vector<EntityPair> pairs;
  std::vector<std::uint32_t> owner;
  std::size_t epoch = 0;
};

/// For each positive (p, q): the k entities of G2 nearest to p (q excluded)
/// give (p, q′), and the k entities of G1 nearest to q (p excluded) give
/// (p′, q). Distances are L1 on the given embeddings; ties go to the lower id.
template <typename T>
NegativeSet mine_negatives(const DenseMatrix<T>& embeddings, std::span<const EntityPair> positives,
                           const MergedGraph& graph, std::size_t k_neg, std::size_t epoch = 0) {
  const std::size_t n1 = graph.num_entities(GraphLabel::G1);
  const std::size_t n2 = graph.num_entities(GraphLabel::G2);
  if (k_neg == 0) throw ArgumentError("k_neg must be at least 1");
  if (k_neg >= n1 || k_neg >= n2)
    throw ArgumentError("k_neg = " + std::to_string(k_neg) + " must be smaller than both candidate pools (" +
                        std::to_string(n1) + ", " + std::to_string(n2) + ")");
  if (embeddings.rows() != graph.num_entities()) throw ShapeError("mine_negatives: embedding rows mismatch");

  const auto off2 = static_cast<EntityId>(graph.entity_offset(GraphLabel::G2));
  std::vector<std::vector<EntityPair>> per(positives.size());
  parallel_for(positives.size(), [&](std::size_t i) {
    const auto [p, q] = positives[i];
    auto nearest = [&](EntityId anchor, EntityId exclude, EntityId begin, std::size_t count) {
      std::vector<std::pair<T, EntityId>> d;
      d.reserve(count);
      const auto row = embeddings.row(anchor);
      for (EntityId e = begin; e < begin + count; ++e)
        if (e != exclude) d.emplace_back(l1_distance<T>(row, embeddings.row(e)), e);
      std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k_neg), d.end());
      d.resize(k_neg);
      return d;
    };
    auto& out = per[i];
    out.reserve(2 * k_neg);
    for (const auto& [dist, e] : nearest(p, q, off2, n2)) out.push_back({p, e});
    for (const auto& [dist, e] : nearest(q, p, 0, n1)) out.push_back({e, q});
  });

  NegativeSet set;
  set.epoch = epoch;
  set.pairs.reserve(positives.size() * 2 * k_neg);
  set.owner.reserve(positives.size() * 2 * k_neg);
  for (std::size_t i = 0; i < per.size(); ++i) {
    for (const auto& pr : per[i]) {
      set.pairs.push_back(pr);
      set.owner.push_back(static_cast<std::uint32_t>(i));
    }
  }
  return set;
}

/// Σ_{(p,q)} Σ_{(p′,q′) ∈ negatives of (p,q)} max(0, d(p,q) − d(p′,q′) + γ), d = L1.
template <typename T>
Var margin_loss(Tape<T>& tape, Var embeddings, std::span<const EntityPair> positives, const NegativeSet& negatives,
                T gamma) {
  if (positives.empty()) throw ArgumentError("margin_loss: no positive pairs");
  if (!(gamma > T{0})) throw ArgumentError("margin_loss: gamma must be positive");
  const Var pos = tape.l1_rowdist(embeddings, {positives.begin(), positives.end()});
  const Var neg = tape.l1_rowdist(embeddings, negatives.pairs);
  return tape.margin_hinge(pos, neg, negatives.owner, gamma);
}

/// Adam or SGD over named tensors. Adam keeps per-tensor step counts, so a
/// tensor added mid-run (W_R) gets its own bias correction.
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& config) : config_(config) {}

  void step(const std::vector<std::pair<std::string, DenseMatrix<T>*>>& params,
            const std::vector<DenseMatrix<T>>& grads) {
    if (params.size() != grads.size()) throw ShapeError("optimizer: parameter/gradient count mismatch");
    const T lr = static_cast<T>(config_.learning_rate);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i].second;
      const auto& g = grads[i];
      if (p.size() != g.size()) throw ShapeError("optimizer: gradient shape mismatch for " + params[i].first);
      if (config_.optimizer == OptimizerKind::Sgd) {
        for (std::size_t j = 0; j < p.size(); ++j) p.data()[j] -= lr * g.data()[j];
        continue;
      }
      auto& st = state_[params[i].first];
      if (st.m.empty()) {
        st.m = DenseMatrix<T>(p.rows(), p.cols());
        st.v = DenseMatrix<T>(p.rows(), p.cols());
      }
      ++st.t;
      const T b1 = static_cast<T>(config_.adam_beta1);
      const T b2 = static_cast<T>(config_.adam_beta2);
      const T eps = static_cast<T>(config_.adam_epsilon);
      const T c1 = T{1} - static_cast<T>(std::pow(config_.adam_beta1, static_cast<double>(st.t)));
      const T c2 = T{1} - static_cast<T>(std::pow(config_.adam_beta2, static_cast<double>(st.t)));
      for (std::size_t j = 0; j < p.size(); ++j) {
        const T gj = g.data()[j];
        T& m = st.m.data()[j];
        T& v = st.v.data()[j];
        m = b1 * m + (T{1} - b1) * gj;
        v = b2 * v + (T{1} - b2) * gj * gj;
        const T mhat = m / c1;
        const T vhat = v / c2;
        p.data()[j] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

 private:
  struct AdamState {
    DenseMatrix<T> m, v;
    std::size_t t = 0;
  };
  TrainConfig config_;
  std::map<std::string, AdamState> state_;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based count of completed epochs
  Stage stage = Stage::Preliminary;
  double loss = 0.0;
  std::optional<double> val_hits1;
  double wall_ms = 0.0;
};

template <typename T>
struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(const Checkpoint<T>&)> on_checkpoint;
  /// Replaces the default f(H_r, T_r).
  RelationFunction<T> relation_function;
};

template <typename T>
struct TrainResult {
  ModelParams<T> params;
  /// Snapshot taken at the stage switch.
  ModelParams<T> preliminary;
  std::size_t switch_epoch = 0;
  std::vector<EpochRecord> log;
  /// Tensors that received a nonzero gradient during each stage.
  std::set<std::string> touched_preliminary;
  std::set<std::string> touched_joint;
};

/// X′ (preliminary) or X_joint (joint) for the given parameters.
template <typename T>
DenseMatrix<T> stage_embeddings(const HgcnConfig& config, const ModelParams<T>& params,
                                const DenseMatrix<T>& features, const NormalizedAdjacency<T>& adj,
                                const MergedGraph& graph, Stage stage,
                                const RelationFunction<T>& relation_function = {}) {
  Tape<T> tape;
  const auto bound = bind_params(tape, params, false);
  const Var x = hgcn_forward(tape, config, bound, tape.constant(features), adj);
  if (stage == Stage::Preliminary || !bound.relation_transform) return tape.value(x);
  const Var r = relation_function ? relation_function(tape, x, graph, bound.relation_transform)
                                  : approximate_relations(tape, x, graph, bound.relation_transform);
  return tape.value(joint_entities(tape, x, r, graph));
}

namespace detail {
template <typename T>
double validation_hits1(const DenseMatrix<T>& emb, std::span<const EntityPair> pairs, const MergedGraph& graph) {
  const std::size_t k1[] = {1};
  return align_entities(emb, pairs, graph, k1).hits.at(1);
}
}  // namespace detail

/// Two-stage training. Stage 1 optimizes the margin loss on X′ until the
/// validation Hits@1 stops improving for `pretrain_patience` checks (or the
/// preliminary cap is hit); stage 2 adds relation approximation and joint
/// entity vectors and optimizes the same loss on X_joint until epoch N.
/// Negatives are mined on X′ every T epochs in both stages.
template <typename T>
TrainResult<T> train(const MergedGraph& graph, const NormalizedAdjacency<T>& adj, const DenseMatrix<T>& features,
                     const AlignmentSeeds& seeds, const HgcnConfig& hcfg, const TrainConfig& tcfg,
                     const TrainHooks<T>& hooks = {}) {
  hcfg.validate();
  tcfg.validate();
  if (seeds.train.empty()) throw ArgumentError("no training seeds");
  if (features.rows() != graph.num_entities() || features.cols() != hcfg.input_dim())
    throw ShapeError("features must be " + std::to_string(graph.num_entities()) + "x" +
                     std::to_string(hcfg.input_dim()) + ", got " + shape_string(features));

  const std::span<const EntityPair> train_pairs = seeds.train;
  const std::span<const EntityPair> val_pairs = seeds.validation.empty() ? train_pairs : std::span(seeds.validation);
  const std::size_t interval = tcfg.resample_interval;
  const std::size_t eval_every = tcfg.effective_eval_interval();
  const T gamma = static_cast<T>(tcfg.gamma);

  TrainResult<T> result;
  result.params = init_params<T>(hcfg);
  Optimizer<T> optimizer(tcfg);
  NegativeSet negatives;

  auto checkpoint = [&](Stage stage, std::size_t epoch) {
    if (hooks.on_checkpoint) hooks.on_checkpoint(Checkpoint<T>{hcfg, result.params, stage, epoch, hcfg.rng_seed});
  };

  // One optimization step; returns the loss.
  auto run_epoch = [&](std::size_t epoch, Stage stage, std::set<std::string>& touched) {
    Tape<T> tape;
    const auto bound = bind_params(tape, result.params, true);
    const Var x = hgcn_forward(tape, hcfg, bound, tape.constant(features, "features"), adj);
    if (epoch % interval == 0 || negatives.pairs.empty())
      negatives = mine_negatives(tape.value(x), train_pairs, graph, tcfg.k_neg, epoch);
    Var emb = x;
    if (stage == Stage::Joint) {
      const Var r = hooks.relation_function ? hooks.relation_function(tape, x, graph, bound.relation_transform)
                                            : approximate_relations(tape, x, graph, bound.relation_transform);
      emb = joint_entities(tape, x, r, graph);
    }
    const Var loss = margin_loss(tape, emb, train_pairs, negatives, gamma);
    const double loss_value = static_cast<double>(tape.value(loss)(0, 0));
    if (!std::isfinite(loss_value)) {
      tape.check_finite();
      throw NumericalError("non-finite loss at epoch " + std::to_string(epoch));
    }
    tape.backward(loss);
    auto tensors = result.params.tensors();
    const auto vars = bound.all();
    std::vector<DenseMatrix<T>> grads;
    grads.reserve(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) {
      grads.push_back(tape.grad(vars[i]));
      if (std::any_of(grads.back().data().begin(), grads.back().data().end(), [](T v) { return v != T{0}; }))
        touched.insert(tensors[i].first);
    }
    optimizer.step(tensors, grads);
    return loss_value;
  };

  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  // Stage 1.
  std::size_t epoch = 0;
  double best = -1.0;
  std::size_t stale = 0;
  bool stabilized = false;
  const std::size_t pre_cap = std::min(tcfg.effective_pretrain_cap(), tcfg.max_epochs);
  while (!stabilized && epoch < pre_cap) {
    EpochRecord rec;
    rec.stage = Stage::Preliminary;
    rec.loss = run_epoch(epoch, Stage::Preliminary, result.touched_preliminary);
    ++epoch;
    rec.epoch = epoch;
    if (epoch % eval_every == 0) {
      const auto emb = stage_embeddings(hcfg, result.params, features, adj, graph, Stage::Preliminary);
      const double h1 = detail::validation_hits1(emb, val_pairs, graph);
      rec.val_hits1 = h1;
      if (h1 > best) {
        best = h1;
        stale = 0;
      } else if (++stale >= tcfg.pretrain_patience) {
        stabilized = true;
      }
    }
    if (epoch % interval == 0) checkpoint(Stage::Preliminary, epoch);
    rec.wall_ms = elapsed_ms();
    result.log.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  result.switch_epoch = epoch;
  result.preliminary = result.params;
  checkpoint(Stage::Preliminary, epoch);
  log_info("preliminary stage finished at epoch " + std::to_string(epoch) +
           (stabilized ? " (validation Hits@1 stabilized)" : " (epoch cap)"));

  // Stage 2.
  result.params.relation_transform = init_relation_transform<T>(hcfg);
  while (epoch < tcfg.max_epochs) {
    EpochRecord rec;
    rec.stage = Stage::Joint;
    rec.loss = run_epoch(epoch, Stage::Joint, result.touched_joint);
    ++epoch;
    rec.epoch = epoch;
    if (epoch % eval_every == 0) {
      const auto emb = stage_embeddings(hcfg, result.params, features, adj, graph, Stage::Joint,
                                        hooks.relation_function);
      rec.val_hits1 = detail::validation_hits1(emb, val_pairs, graph);
    }
    if (epoch % interval == 0) checkpoint(Stage::Joint, epoch);
    rec.wall_ms = elapsed_ms();
    result.log.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  checkpoint(Stage::Joint, epoch);
  return result;
}

}  // namespace kgalign
