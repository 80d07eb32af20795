#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/kg_core.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/parallel.hpp"
#include "kgalign/ranking.hpp"
#include "kgalign/relation_rep.hpp"

namespace kgalign {

enum class CandidatePolicy {
  TestCounterparts,  // candidates are the other side of the test pairs
  AllOppositeGraph,  // every entity of the other graph
};

enum class Direction { Forward, Bidirectional };

inline const char* to_string(CandidatePolicy p) {
  return p == CandidatePolicy::TestCounterparts ? "test-counterparts" : "all-opposite-graph";
}
inline const char* to_string(Direction d) { return d == Direction::Forward ? "G1->G2" : "both"; }

struct AlignmentReport {
  std::vector<RankedQuery> forward;   // G1 → G2
  std::vector<RankedQuery> backward;  // G2 → G1, only when bidirectional
  std::map<std::size_t, double> hits;
  Direction direction = Direction::Forward;
  CandidatePolicy policy = CandidatePolicy::TestCounterparts;
};

namespace detail {
template <typename T>
std::vector<RankedQuery> rank_side(const DenseMatrix<T>& emb, std::span<const EntityPair> pairs, bool reverse,
                                   const std::vector<EntityId>& pool, std::size_t top_k) {
  std::vector<RankedQuery> out(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const EntityId src = reverse ? pairs[i].target : pairs[i].source;
    const EntityId dst = reverse ? pairs[i].source : pairs[i].target;
    std::vector<Candidate> cands(pool.size());
    const auto row = emb.row(src);
    for (std::size_t j = 0; j < pool.size(); ++j)
      cands[j] = {pool[j], static_cast<double>(l1_distance<T>(row, emb.row(pool[j])))};
    out[i] = rank_query(src, dst, std::move(cands), top_k);
  });
  return out;
}
}  // namespace detail

/// Ranks candidates for each test entity by ascending L1 distance (ties by id).
template <typename T>
AlignmentReport align_entities(const DenseMatrix<T>& embeddings, std::span<const EntityPair> test_pairs,
                               const MergedGraph& graph, std::span<const std::size_t> k_list,
                               CandidatePolicy policy = CandidatePolicy::TestCounterparts,
                               Direction direction = Direction::Forward) {
  check_k_list(k_list);
  if (test_pairs.empty()) throw ArgumentError("entity test set is empty");
  if (embeddings.rows() != graph.num_entities())
    throw ShapeError("embedding rows " + std::to_string(embeddings.rows()) + " != entity count " +
                     std::to_string(graph.num_entities()));
  const std::size_t top_k = *std::max_element(k_list.begin(), k_list.end());

  std::vector<EntityId> g1_pool, g2_pool;
  if (policy == CandidatePolicy::TestCounterparts) {
    for (const auto& p : test_pairs) {
      g1_pool.push_back(p.source);
      g2_pool.push_back(p.target);
    }
  } else {
    for (std::size_t i = 0; i < graph.num_entities(); ++i)
      (graph.entity_graph(static_cast<EntityId>(i)) == GraphLabel::G1 ? g1_pool : g2_pool)
          .push_back(static_cast<EntityId>(i));
  }

  AlignmentReport report;
  report.policy = policy;
  report.direction = direction;
  report.forward = detail::rank_side(embeddings, test_pairs, false, g2_pool, top_k);
  if (direction == Direction::Bidirectional) {
    report.backward = detail::rank_side(embeddings, test_pairs, true, g1_pool, top_k);
    for (auto k : k_list) report.hits[k] = 0.5 * (hits_at(report.forward, k) + hits_at(report.backward, k));
  } else {
    report.hits = hits_table(report.forward, k_list);
  }
  return report;
}

// ---- diagnostics -----------------------------------------------------------

struct EntityPartitionStats {
  std::string name;
  std::size_t count = 0;
  double mean_neighbor_entities[2] = {0, 0};   // G1 source, G2 counterpart
  double mean_neighbor_relations[2] = {0, 0};
  double pct_with_seed_neighbor = 0;           // ≥1 neighbor entity among the train seeds
  double pct_with_aligned_relation = std::numeric_limits<double>::quiet_NaN();
};

struct RelationPartitionStats {
  std::string name;
  std::size_t count = 0;
  double mean_frequency[2] = {0, 0};  // triples per relation, G1 and G2 side
};

struct AlignmentDiagnostics {
  std::vector<EntityPartitionStats> entities;
  std::vector<RelationPartitionStats> relations;
};

namespace detail {
inline const char* partition_name(bool pre, bool joint) {
  if (pre && joint) return "pre+joint+";
  if (!pre && joint) return "pre-joint+";
  if (pre && !joint) return "pre+joint-";
  return "pre-joint-";
}

inline std::size_t partition_index(bool pre, bool joint) {
  if (pre && joint) return 0;
  if (!pre && joint) return 1;
  if (!pre && !joint) return 2;
  return 3;
}

inline void check_same_queries(std::span<const RankedQuery> a, std::span<const RankedQuery> b) {
  if (a.size() != b.size()) throw ArgumentError("reports cover different test sets");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> x, y;
  for (const auto& q : a) x.emplace_back(q.source, q.target);
  for (const auto& q : b) y.emplace_back(q.source, q.target);
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  if (x != y) throw ArgumentError("reports cover different test sets");
}
}  // namespace detail

/// Splits test entities (and optionally test relations) by rank-1 correctness
/// in the preliminary and joint stages and summarizes each group's
/// neighborhood. Partitions are emitted in the order pre+joint+,
/// pre-joint+, pre-joint-, pre+joint-; empty partitions are kept.
inline AlignmentDiagnostics alignment_statistics(const MergedGraph& graph, const AlignmentReport& pre,
                                                 const AlignmentReport& joint, std::span<const EntityPair> train_seeds,
                                                 const RelationReport* relations_pre = nullptr,
                                                 const RelationReport* relations_joint = nullptr) {
  detail::check_same_queries(pre.forward, joint.forward);
  std::map<std::uint32_t, bool> joint_correct;
  for (const auto& q : joint.forward) joint_correct[q.source] = q.rank == 1;

  std::set<EntityId> seed_entities;
  for (const auto& p : train_seeds) {
    seed_entities.insert(p.source);
    seed_entities.insert(p.target);
  }
  std::set<RelationId> aligned_relations;
  if (relations_pre)
    for (const auto& q : relations_pre->queries)
      if (q.rank == 1) aligned_relations.insert(q.source);

  AlignmentDiagnostics out;
  std::vector<std::size_t> with_seed(4, 0), with_rel(4, 0);
  out.entities.resize(4);
  for (auto [p, j] : {std::pair{true, true}, std::pair{false, true}, std::pair{false, false}, std::pair{true, false}})
    out.entities[detail::partition_index(p, j)].name = detail::partition_name(p, j);

  for (const auto& q : pre.forward) {
    const auto idx = detail::partition_index(q.rank == 1, joint_correct.at(q.source));
    auto& s = out.entities[idx];
    ++s.count;
    const EntityId ends[2] = {q.source, q.target};
    for (int side = 0; side < 2; ++side) {
      s.mean_neighbor_entities[side] += static_cast<double>(graph.entity_neighbors()[ends[side]].size());
      s.mean_neighbor_relations[side] += static_cast<double>(graph.entity_relations()[ends[side]].size());
    }
    const auto& nbrs = graph.entity_neighbors()[q.source];
    if (std::any_of(nbrs.begin(), nbrs.end(), [&](EntityId e) { return seed_entities.contains(e); }))
      ++with_seed[idx];
    const auto& rels = graph.entity_relations()[q.source];
    if (std::any_of(rels.begin(), rels.end(), [&](RelationId r) { return aligned_relations.contains(r); }))
      ++with_rel[idx];
  }
  for (std::size_t i = 0; i < 4; ++i) {
    auto& s = out.entities[i];
    if (s.count == 0) continue;
    const double n = static_cast<double>(s.count);
    for (int side = 0; side < 2; ++side) {
      s.mean_neighbor_entities[side] /= n;
      s.mean_neighbor_relations[side] /= n;
    }
    s.pct_with_seed_neighbor = 100.0 * static_cast<double>(with_seed[i]) / n;
    if (relations_pre) s.pct_with_aligned_relation = 100.0 * static_cast<double>(with_rel[i]) / n;
  }

  if (relations_pre && relations_joint) {
    detail::check_same_queries(relations_pre->queries, relations_joint->queries);
    std::map<std::uint32_t, bool> rel_joint;
    for (const auto& q : relations_joint->queries) rel_joint[q.source] = q.rank == 1;
    out.relations.resize(4);
    for (auto [p, j] : {std::pair{true, true}, std::pair{false, true}, std::pair{false, false}, std::pair{true, false}})
      out.relations[detail::partition_index(p, j)].name = detail::partition_name(p, j);
    for (const auto& q : relations_pre->queries) {
      auto& s = out.relations[detail::partition_index(q.rank == 1, rel_joint.at(q.source))];
      ++s.count;
      s.mean_frequency[0] += static_cast<double>(graph.relation_frequency()[q.source]);
      s.mean_frequency[1] += static_cast<double>(graph.relation_frequency()[q.target]);
    }
    for (auto& s : out.relations) {
      if (s.count == 0) continue;
      s.mean_frequency[0] /= static_cast<double>(s.count);
      s.mean_frequency[1] /= static_cast<double>(s.count);
    }
  }
  return out;
}

// ---- writers ---------------------------------------------------------------

/// `source<TAB>target<TAB>rank<TAB>cand1..candK<TAB>score1..scoreK`, using the graphs' own ids.
inline void write_entity_report(std::ostream& out, const AlignmentReport& report, const MergedGraph& graph) {
  out << std::setprecision(9);
  auto emit = [&](const std::vector<RankedQuery>& queries) {
    for (const auto& q : queries) {
      out << graph.local_entity(q.source).second << '\t' << graph.local_entity(q.target).second << '\t' << q.rank;
      for (const auto& c : q.top) out << '\t' << graph.local_entity(c.id).second;
      for (const auto& c : q.top) out << '\t' << c.score;
      out << '\n';
    }
  };
  emit(report.forward);
  emit(report.backward);
}

/// `g1_rel<TAB>rank1_g2_rel..rankK_g2_rel<TAB>score1..scoreK`.
inline void write_relation_predictions(std::ostream& out, const RelationReport& report, const MergedGraph& graph) {
  out << std::setprecision(9);
  for (const auto& q : report.queries) {
    out << graph.local_relation(q.source).second;
    for (const auto& c : q.top) out << '\t' << graph.local_relation(c.id).second;
    for (const auto& c : q.top) out << '\t' << c.score;
    out << '\n';
  }
}

/// Key-value summary block: `key = value` per line.
inline void write_hits_summary(std::ostream& out, const std::string& prefix, const std::map<std::size_t, double>& hits,
                               std::size_t queries) {
  out << prefix << ".queries = " << queries << '\n';
  for (const auto& [k, v] : hits)
    out << prefix << ".hits@" << k << " = " << std::fixed << std::setprecision(4) << v << std::defaultfloat << '\n';
}

inline void write_diagnostics(std::ostream& out, const AlignmentDiagnostics& d) {
  out << std::fixed << std::setprecision(2);
  out << "partition\tcount\tnbr_ent_g1\tnbr_ent_g2\tnbr_rel_g1\tnbr_rel_g2\tseed_nbr_pct\taligned_rel_pct\n";
  for (const auto& s : d.entities) {
    out << s.name << '\t' << s.count << '\t' << s.mean_neighbor_entities[0] << '\t' << s.mean_neighbor_entities[1]
        << '\t' << s.mean_neighbor_relations[0] << '\t' << s.mean_neighbor_relations[1] << '\t'
        << s.pct_with_seed_neighbor << '\t';
    if (std::isnan(s.pct_with_aligned_relation))
      out << "n/a";
    else
      out << s.pct_with_aligned_relation;
    out << '\n';
  }
  if (!d.relations.empty()) {
    out << "relation_partition\tcount\tfreq_g1\tfreq_g2\n";
    for (const auto& s : d.relations)
      out << s.name << '\t' << s.count << '\t' << s.mean_frequency[0] << '\t' << s.mean_frequency[1] << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace kgalign
