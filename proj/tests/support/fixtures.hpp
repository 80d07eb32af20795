#pragma once

// Small graphs and random instances shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "kgalign/kgalign.hpp"

namespace kgalign::testing {

/// Triples in local ids for each side; entity ids 0..n-1, relation ids 0..r-1.
inline MergedGraph make_graph(std::size_t n1, std::size_t r1, std::vector<Triple> t1, std::size_t n2, std::size_t r2,
                              std::vector<Triple> t2) {
  auto ids = [](std::size_t n) {
    std::vector<std::uint32_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint32_t>(i);
    return v;
  };
  return merge_graphs(KnowledgeGraph::create(GraphLabel::G1, ids(n1), ids(r1), std::move(t1)),
                      KnowledgeGraph::create(GraphLabel::G2, ids(n2), ids(r2), std::move(t2)));
}

/// Three entities and one relation per side, two chains mirrored with one
/// edge flipped. Globals: G1 = 0..2, G2 = 3..5; relations 0 (G1), 1 (G2).
inline MergedGraph six_node_graph() {
  return make_graph(3, 1, {{0, 0, 1}, {1, 0, 2}}, 3, 1, {{0, 0, 1}, {2, 0, 1}});
}

inline DenseMatrix<double> random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  DenseMatrix<double> m(rows, cols);
  Gaussian g(scale);
  for (auto& v : m.data()) v = g(rng);
  return m;
}

/// A random merged graph where every relation has at least one triple.
struct RandomInstance {
  MergedGraph graph;
  std::vector<EntityPair> pairs;  // one-to-one G1→G2 pairs over min(n1, n2) entities
};

inline RandomInstance random_instance(Rng& rng, std::size_t max_nodes = 50) {
  const std::size_t half = max_nodes / 2;
  auto side = [&](std::size_t& n, std::size_t& r, std::vector<Triple>& triples) {
    n = 4 + uniform_index(rng, half - 3);
    r = 1 + uniform_index(rng, 4);
    const std::size_t extra = uniform_index(rng, 2 * n);
    for (std::size_t i = 0; i < r + extra; ++i) {
      const auto rel = static_cast<RelationId>(i < r ? i : uniform_index(rng, r));
      triples.push_back({static_cast<EntityId>(uniform_index(rng, n)), rel, static_cast<EntityId>(uniform_index(rng, n))});
    }
  };
  std::size_t n1 = 0, r1 = 0, n2 = 0, r2 = 0;
  std::vector<Triple> t1, t2;
  side(n1, r1, t1);
  side(n2, r2, t2);
  RandomInstance inst{make_graph(n1, r1, std::move(t1), n2, r2, std::move(t2)), {}};
  std::vector<EntityId> targets(n2);
  for (std::size_t i = 0; i < n2; ++i) targets[i] = static_cast<EntityId>(n1 + i);
  portable_shuffle(targets, rng);
  for (std::size_t i = 0; i < std::min(n1, n2); ++i) inst.pairs.push_back({static_cast<EntityId>(i), targets[i]});
  return inst;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("kgalign_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace kgalign::testing
