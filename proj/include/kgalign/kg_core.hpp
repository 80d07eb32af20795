#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/log.hpp"
#include "kgalign/random.hpp"

namespace kgalign {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

enum class GraphLabel : std::uint8_t { G1 = 0, G2 = 1 };

inline const char* to_string(GraphLabel label) { return label == GraphLabel::G1 ? "G1" : "G2"; }

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  auto operator<=>(const Triple&) const = default;
};

/// A (source, target) entity pair; source lives in G1 and target in G2.
struct EntityPair {
  EntityId source = 0;
  EntityId target = 0;

  auto operator<=>(const EntityPair&) const = default;
};

struct RelationPair {
  RelationId source = 0;
  RelationId target = 0;

  auto operator<=>(const RelationPair&) const = default;
};

/// One KG: ordered entity/relation id sets plus a deduplicated triple list.
/// Ids are whatever the source files used; names live in optional side tables.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Validates the id sets and triples. Duplicate triples are dropped (and
  /// counted in log output); duplicate ids or dangling references throw.
  static KnowledgeGraph create(GraphLabel label, std::vector<EntityId> entities,
                               std::vector<RelationId> relations, std::vector<Triple> triples,
                               std::vector<std::string> entity_names = {},
                               std::vector<std::string> relation_names = {}) {
    KnowledgeGraph g;
    g.label_ = label;
    g.entities_ = std::move(entities);
    g.relations_ = std::move(relations);
    g.entity_names_ = std::move(entity_names);
    g.relation_names_ = std::move(relation_names);
    if (!g.entity_names_.empty() && g.entity_names_.size() != g.entities_.size())
      throw StructuralError("entity name table size does not match entity count");
    if (!g.relation_names_.empty() && g.relation_names_.size() != g.relations_.size())
      throw StructuralError("relation name table size does not match relation count");

    g.entity_pos_.reserve(g.entities_.size());
    for (std::size_t i = 0; i < g.entities_.size(); ++i) {
      if (!g.entity_pos_.emplace(g.entities_[i], static_cast<std::uint32_t>(i)).second)
        throw StructuralError(std::string("duplicate entity id ") + std::to_string(g.entities_[i]) +
                              " in " + to_string(label));
    }
    g.relation_pos_.reserve(g.relations_.size());
    for (std::size_t i = 0; i < g.relations_.size(); ++i) {
      if (!g.relation_pos_.emplace(g.relations_[i], static_cast<std::uint32_t>(i)).second)
        throw StructuralError(std::string("duplicate relation id ") +
                              std::to_string(g.relations_[i]) + " in " + to_string(label));
    }
    for (const auto& t : triples) {
      if (!g.entity_pos_.contains(t.head) || !g.entity_pos_.contains(t.tail))
        throw StructuralError(std::string("triple references unknown entity in ") +
                              to_string(label) + ": (" + std::to_string(t.head) + ", " +
                              std::to_string(t.relation) + ", " + std::to_string(t.tail) + ")");
      if (!g.relation_pos_.contains(t.relation))
        throw StructuralError(std::string("triple references unknown relation ") +
                              std::to_string(t.relation) + " in " + to_string(label));
    }
    // Keep first-occurrence order so writers reproduce the input layout.
    std::vector<std::size_t> order(triples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return triples[a] < triples[b]; });
    std::vector<char> keep(triples.size(), 1);
    std::size_t dropped = 0;
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (triples[order[i]] == triples[order[i - 1]]) {
        keep[order[i]] = 0;
        ++dropped;
      }
    }
    g.triples_.reserve(triples.size() - dropped);
    for (std::size_t i = 0; i < triples.size(); ++i)
      if (keep[i]) g.triples_.push_back(triples[i]);
    if (dropped > 0)
      log_info(std::string("dropped ") + std::to_string(dropped) + " duplicate triples from " +
               to_string(label));
    return g;
  }

  GraphLabel label() const { return label_; }
  const std::vector<EntityId>& entities() const { return entities_; }
  const std::vector<RelationId>& relations() const { return relations_; }
  const std::vector<Triple>& triples() const { return triples_; }
  const std::vector<std::string>& entity_names() const { return entity_names_; }
  const std::vector<std::string>& relation_names() const { return relation_names_; }

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }

  /// Position of an entity id in the ordered entity set.
  std::optional<std::uint32_t> entity_position(EntityId id) const {
    auto it = entity_pos_.find(id);
    if (it == entity_pos_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::uint32_t> relation_position(RelationId id) const {
    auto it = relation_pos_.find(id);
    if (it == relation_pos_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    return a.label_ == b.label_ && a.entities_ == b.entities_ && a.relations_ == b.relations_ &&
           a.triples_ == b.triples_;
  }

 private:
  GraphLabel label_ = GraphLabel::G1;
  std::vector<EntityId> entities_;
  std::vector<RelationId> relations_;
  std::vector<Triple> triples_;
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<EntityId, std::uint32_t> entity_pos_;
  std::unordered_map<RelationId, std::uint32_t> relation_pos_;
};

/// Sorted list of row indices per group (per relation, per entity, ...).
using RowGroups = std::vector<std::vector<std::uint32_t>>;

/// G1 and G2 placed in one graph. G1 entities occupy global indices
/// [0, |E1|) and G2 entities [|E1|, n); relations are offset the same way.
class MergedGraph {
 public:
  MergedGraph() = default;

  const std::array<KnowledgeGraph, 2>& graphs() const { return graphs_; }
  const KnowledgeGraph& graph(GraphLabel label) const {
    return graphs_[static_cast<std::size_t>(label)];
  }

  std::size_t num_entities() const { return num_entities_; }
  std::size_t num_relations() const { return num_relations_; }
  std::size_t entity_offset(GraphLabel label) const {
    return label == GraphLabel::G1 ? 0 : graphs_[0].num_entities();
  }
  std::size_t relation_offset(GraphLabel label) const {
    return label == GraphLabel::G1 ? 0 : graphs_[0].num_relations();
  }
  std::size_t num_entities(GraphLabel label) const { return graph(label).num_entities(); }
  std::size_t num_relations(GraphLabel label) const { return graph(label).num_relations(); }

  const std::vector<Triple>& triples() const { return triples_; }

  GraphLabel entity_graph(EntityId global) const {
    return global < graphs_[0].num_entities() ? GraphLabel::G1 : GraphLabel::G2;
  }
  GraphLabel relation_graph(RelationId global) const {
    return global < graphs_[0].num_relations() ? GraphLabel::G1 : GraphLabel::G2;
  }

  EntityId global_entity(GraphLabel label, EntityId local_id) const {
    auto pos = graph(label).entity_position(local_id);
    if (!pos)
      throw ArgumentError(std::string("unknown entity id ") + std::to_string(local_id) + " in " +
                          to_string(label));
    return static_cast<EntityId>(entity_offset(label) + *pos);
  }
  RelationId global_relation(GraphLabel label, RelationId local_id) const {
    auto pos = graph(label).relation_position(local_id);
    if (!pos)
      throw ArgumentError(std::string("unknown relation id ") + std::to_string(local_id) + " in " +
                          to_string(label));
    return static_cast<RelationId>(relation_offset(label) + *pos);
  }

  /// Inverse of global_entity: (graph label, original local id).
  std::pair<GraphLabel, EntityId> local_entity(EntityId global) const {
    check_entity(global);
    const auto label = entity_graph(global);
    return {label, graph(label).entities()[global - entity_offset(label)]};
  }
  std::pair<GraphLabel, RelationId> local_relation(RelationId global) const {
    check_relation(global);
    const auto label = relation_graph(global);
    return {label, graph(label).relations()[global - relation_offset(label)]};
  }

  /// H_r, T_r as sorted global entity indices.
  const RowGroups& relation_heads() const { return heads_; }
  const RowGroups& relation_tails() const { return tails_; }
  /// HT_r = H_r ∪ T_r.
  const RowGroups& relation_endpoints() const { return endpoints_; }
  /// R_e: relations touching e as head or tail.
  const RowGroups& entity_relations() const { return entity_relations_; }
  /// Distinct neighbor entities (either direction, self excluded).
  const RowGroups& entity_neighbors() const { return entity_neighbors_; }
  /// Number of triples per relation.
  const std::vector<std::size_t>& relation_frequency() const { return relation_frequency_; }

  void check_entity(EntityId e) const {
    if (e >= num_entities_)
      throw ArgumentError("entity index " + std::to_string(e) + " out of range [0, " +
                          std::to_string(num_entities_) + ")");
  }
  void check_relation(RelationId r) const {
    if (r >= num_relations_)
      throw ArgumentError("relation index " + std::to_string(r) + " out of range [0, " +
                          std::to_string(num_relations_) + ")");
  }

  /// Relation averaging needs at least one triple per relation.
  void require_relations_used() const {
    for (std::size_t r = 0; r < num_relations_; ++r) {
      if (relation_frequency_[r] == 0) {
        const auto [label, local] = local_relation(static_cast<RelationId>(r));
        throw StructuralError("relation " + std::to_string(local) + " in " + to_string(label) +
                              " has no triples");
      }
    }
  }

  friend MergedGraph merge_graphs(KnowledgeGraph g1, KnowledgeGraph g2);

 private:
  std::array<KnowledgeGraph, 2> graphs_;
  std::size_t num_entities_ = 0;
  std::size_t num_relations_ = 0;
  std::vector<Triple> triples_;
  RowGroups heads_, tails_, endpoints_, entity_relations_, entity_neighbors_;
  std::vector<std::size_t> relation_frequency_;
};

namespace detail {
inline void sort_unique(std::vector<std::uint32_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}
}  // namespace detail

/// Re-indexes both graphs into one contiguous id space and precomputes the
/// per-relation and per-entity incidence lists.
inline MergedGraph merge_graphs(KnowledgeGraph g1, KnowledgeGraph g2) {
  if (g1.label() != GraphLabel::G1 || g2.label() != GraphLabel::G2)
    throw ArgumentError("merge_graphs expects (G1, G2)");
  MergedGraph m;
  m.num_entities_ = g1.num_entities() + g2.num_entities();
  m.num_relations_ = g1.num_relations() + g2.num_relations();
  m.graphs_ = {std::move(g1), std::move(g2)};

  for (auto label : {GraphLabel::G1, GraphLabel::G2}) {
    const auto& g = m.graph(label);
    const auto eoff = static_cast<EntityId>(m.entity_offset(label));
    const auto roff = static_cast<RelationId>(m.relation_offset(label));
    for (const auto& t : g.triples()) {
      m.triples_.push_back({eoff + *g.entity_position(t.head), roff + *g.relation_position(t.relation),
                            eoff + *g.entity_position(t.tail)});
    }
  }

  m.heads_.assign(m.num_relations_, {});
  m.tails_.assign(m.num_relations_, {});
  m.endpoints_.assign(m.num_relations_, {});
  m.entity_relations_.assign(m.num_entities_, {});
  m.entity_neighbors_.assign(m.num_entities_, {});
  m.relation_frequency_.assign(m.num_relations_, 0);
  for (const auto& t : m.triples_) {
    m.heads_[t.relation].push_back(t.head);
    m.tails_[t.relation].push_back(t.tail);
    m.endpoints_[t.relation].push_back(t.head);
    m.endpoints_[t.relation].push_back(t.tail);
    m.entity_relations_[t.head].push_back(t.relation);
    m.entity_relations_[t.tail].push_back(t.relation);
    if (t.head != t.tail) {
      m.entity_neighbors_[t.head].push_back(t.tail);
      m.entity_neighbors_[t.tail].push_back(t.head);
    }
    ++m.relation_frequency_[t.relation];
  }
  for (auto* groups : {&m.heads_, &m.tails_, &m.endpoints_, &m.entity_relations_, &m.entity_neighbors_})
    for (auto& v : *groups) detail::sort_unique(v);
  return m;
}

/// Relations r with a triple (e, r, .) or (., r, e).
inline const std::vector<RelationId>& incident_relations(const MergedGraph& graph, EntityId entity) {
  graph.check_entity(entity);
  return graph.entity_relations()[entity];
}

struct RelationEndpoints {
  std::vector<EntityId> heads;
  std::vector<EntityId> tails;
  std::vector<EntityId> combined;
};

inline RelationEndpoints relation_endpoints(const MergedGraph& graph, RelationId relation) {
  graph.check_relation(relation);
  return {graph.relation_heads()[relation], graph.relation_tails()[relation],
          graph.relation_endpoints()[relation]};
}

/// Seed pairs (global entity indices) partitioned into train / validation / test.
struct AlignmentSeeds {
  std::vector<EntityPair> pairs;
  std::vector<EntityPair> train;
  std::vector<EntityPair> validation;
  std::vector<EntityPair> test;
  double split_ratio = 0.0;
};

struct RelationTestSet {
  std::vector<RelationPair> pairs;
};

/// Throws if any entity appears in more than one pair.
inline void check_one_to_one(const std::vector<EntityPair>& pairs) {
  std::vector<EntityId> sources, targets;
  sources.reserve(pairs.size());
  targets.reserve(pairs.size());
  for (const auto& p : pairs) {
    sources.push_back(p.source);
    targets.push_back(p.target);
  }
  std::sort(sources.begin(), sources.end());
  std::sort(targets.begin(), targets.end());
  if (std::adjacent_find(sources.begin(), sources.end()) != sources.end() ||
      std::adjacent_find(targets.begin(), targets.end()) != targets.end())
    throw StructuralError("an entity appears in more than one seed pair");
}

namespace detail {
/// Shared by split_seeds and the synthetic generator (which also allows 0 and 1).
inline AlignmentSeeds split_pairs(std::vector<EntityPair> pairs, double train_fraction,
                                  double validation_fraction, std::uint64_t rng_seed) {
  check_one_to_one(pairs);
  AlignmentSeeds seeds;
  seeds.split_ratio = train_fraction;
  std::vector<EntityPair> shuffled = pairs;
  Rng rng(derive_seed(rng_seed, "split_seeds"));
  portable_shuffle(shuffled, rng);
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(pairs.size())));
  const auto n_val = static_cast<std::size_t>(
      std::llround(validation_fraction * static_cast<double>(n_train)));
  seeds.validation.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
  seeds.train.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val),
                     shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
  seeds.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
  seeds.pairs = std::move(pairs);
  return seeds;
}
}  // namespace detail

/// Deterministic shuffle-and-split. |train ∪ validation| = round(fraction·|pairs|);
/// the validation carve-out is a fraction of that train portion.
inline AlignmentSeeds split_seeds(std::vector<EntityPair> pairs, double train_fraction,
                                  std::uint64_t rng_seed, double validation_fraction = 0.0) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ArgumentError("train_fraction must lie in (0, 1), got " + std::to_string(train_fraction));
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ArgumentError("validation_fraction must lie in [0, 1)");
  return detail::split_pairs(std::move(pairs), train_fraction, validation_fraction, rng_seed);
}

}  // namespace kgalign
