#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/kg_core.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/parallel.hpp"
#include "kgalign/ranking.hpp"
#include "kgalign/tape.hpp"

namespace kgalign {

/// r = [mean(X′[H_r]) ‖ mean(X′[T_r])] · W_R, one row per merged relation.
/// Without W_R the concatenated means are returned as they are.
template <typename T>
Var approximate_relations(Tape<T>& tape, Var x_prime, const MergedGraph& graph, std::optional<Var> w_r) {
  graph.require_relations_used();
  if (tape.value(x_prime).rows() != graph.num_entities())
    throw ShapeError("approximate_relations: X′ has " + std::to_string(tape.value(x_prime).rows()) +
                     " rows, graph has " + std::to_string(graph.num_entities()) + " entities");
  const Var heads = tape.group_mean(x_prime, graph.relation_heads());
  const Var tails = tape.group_mean(x_prime, graph.relation_tails());
  const Var cat = tape.concat_cols(heads, tails);
  if (!w_r) return cat;
  if (tape.value(*w_r).rows() != tape.value(cat).cols())
    throw ShapeError("W_R must have 2·d̃ = " + std::to_string(tape.value(cat).cols()) + " rows");
  return tape.matmul(cat, *w_r);
}

/// Pluggable f(H_r, T_r); the default is approximate_relations.
template <typename T>
using RelationFunction = std::function<Var(Tape<T>&, Var, const MergedGraph&, std::optional<Var>)>;

template <typename T>
DenseMatrix<T> approximate_relations(const DenseMatrix<T>& x_prime, const MergedGraph& graph,
                                     const std::optional<DenseMatrix<T>>& w_r) {
  Tape<T> tape;
  const Var x = tape.constant(x_prime);
  std::optional<Var> w;
  if (w_r) w = tape.constant(*w_r);
  return tape.value(approximate_relations(tape, x, graph, w));
}

/// e_joint = [x′_e ‖ Σ_{r ∈ R_e} r]; entities without relations get a zero block.
template <typename T>
Var joint_entities(Tape<T>& tape, Var x_prime, Var relations, const MergedGraph& graph) {
  if (tape.value(relations).rows() != graph.num_relations())
    throw ShapeError("joint_entities: relation matrix has " + std::to_string(tape.value(relations).rows()) +
                     " rows, graph has " + std::to_string(graph.num_relations()) + " relations");
  const Var context = tape.group_sum(relations, graph.entity_relations());
  return tape.concat_cols(x_prime, context);
}

template <typename T>
DenseMatrix<T> joint_entities(const DenseMatrix<T>& x_prime, const DenseMatrix<T>& relations,
                              const MergedGraph& graph) {
  Tape<T> tape;
  return tape.value(joint_entities(tape, tape.constant(x_prime), tape.constant(relations), graph));
}

namespace detail {
inline bool sorted_contains(const std::vector<std::uint32_t>& v, std::uint32_t x) {
  return std::binary_search(v.begin(), v.end(), x);
}
}  // namespace detail

/// |P_{r1 r2}|: seed pairs whose G1 side touches r1 and whose G2 side touches r2.
inline std::size_t seed_overlap(RelationId r1, RelationId r2, const MergedGraph& graph,
                                std::span<const EntityPair> seeds) {
  const auto& ht1 = graph.relation_endpoints()[r1];
  const auto& ht2 = graph.relation_endpoints()[r2];
  std::size_t count = 0;
  for (const auto& p : seeds)
    if (detail::sorted_contains(ht1, p.source) && detail::sorted_contains(ht2, p.target)) ++count;
  return count;
}

/// s(r1, r2) = ‖r1 − r2‖₁ − β · |P| / (|HT_r1| + |HT_r2|).
/// The two endpoint sets are disjoint because they live in different graphs.
template <typename T>
double relation_distance(RelationId r1, RelationId r2, const DenseMatrix<T>& relations, const MergedGraph& graph,
                         std::span<const EntityPair> train_seeds, double beta) {
  graph.check_relation(r1);
  graph.check_relation(r2);
  if (graph.relation_graph(r1) != GraphLabel::G1 || graph.relation_graph(r2) != GraphLabel::G2)
    throw ArgumentError("relation_distance expects r1 from G1 and r2 from G2");
  if (beta < 0.0) throw ArgumentError("beta must be non-negative");
  const double l1 = static_cast<double>(l1_distance<T>(relations.row(r1), relations.row(r2)));
  const auto denom = graph.relation_endpoints()[r1].size() + graph.relation_endpoints()[r2].size();
  if (denom == 0) return l1;
  const auto overlap = seed_overlap(r1, r2, graph, train_seeds);
  return l1 - beta * static_cast<double>(overlap) / static_cast<double>(denom);
}

/// Overlap counts for every (G1 relation, G2 relation) pair, indexed
/// [r1][r2 − offset]. Walks each seed's incident relations instead of
/// testing every pair against every seed.
inline std::vector<std::vector<std::uint32_t>> seed_overlap_table(const MergedGraph& graph,
                                                                  std::span<const EntityPair> seeds) {
  const std::size_t n1 = graph.num_relations(GraphLabel::G1);
  const std::size_t n2 = graph.num_relations(GraphLabel::G2);
  const std::size_t off = graph.relation_offset(GraphLabel::G2);
  std::vector<std::vector<std::uint32_t>> table(n1, std::vector<std::uint32_t>(n2, 0));
  for (const auto& p : seeds) {
    for (auto r1 : graph.entity_relations()[p.source]) {
      if (r1 >= n1) continue;
      for (auto r2 : graph.entity_relations()[p.target])
        if (r2 >= off) ++table[r1][r2 - off];
    }
  }
  return table;
}

struct RelationReport {
  std::vector<RankedQuery> queries;
  std::map<std::size_t, double> hits;
};

/// Ranks every G2 relation for each test relation by ascending s.
template <typename T>
RelationReport align_relations(const DenseMatrix<T>& relations, const MergedGraph& graph,
                               std::span<const EntityPair> train_seeds, const RelationTestSet& test, double beta,
                               std::span<const std::size_t> k_list) {
  check_k_list(k_list);
  if (test.pairs.empty()) throw ArgumentError("relation test set is empty");
  if (beta < 0.0) throw ArgumentError("beta must be non-negative");
  const auto overlap = seed_overlap_table(graph, train_seeds);
  const std::size_t off = graph.relation_offset(GraphLabel::G2);
  const std::size_t n2 = graph.num_relations(GraphLabel::G2);
  const std::size_t top_k = k_list.empty() ? 1 : *std::max_element(k_list.begin(), k_list.end());

  RelationReport report;
  report.queries.resize(test.pairs.size());
  parallel_for(test.pairs.size(), [&](std::size_t i) {
    const auto [r1, r2_true] = test.pairs[i];
    std::vector<Candidate> cands(n2);
    const auto ht1 = graph.relation_endpoints()[r1].size();
    for (std::size_t j = 0; j < n2; ++j) {
      const auto r2 = static_cast<RelationId>(off + j);
      const double l1 = static_cast<double>(l1_distance<T>(relations.row(r1), relations.row(r2)));
      const auto denom = ht1 + graph.relation_endpoints()[r2].size();
      const double bonus = denom == 0 ? 0.0 : beta * overlap[r1][j] / static_cast<double>(denom);
      cands[j] = {r2, l1 - bonus};
    }
    report.queries[i] = rank_query(r1, r2_true, std::move(cands), top_k);
  });
  report.hits = hits_table(report.queries, k_list);
  return report;
}

}  // namespace kgalign
