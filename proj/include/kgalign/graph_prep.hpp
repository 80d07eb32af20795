#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

#include "kgalign/kg_core.hpp"
#include "kgalign/matrix.hpp"

namespace kgalign {

/// D̃^(−1/2) (A + I) D̃^(−1/2) over the merged entity graph.
template <typename T>
struct NormalizedAdjacency {
  SparseMatrix<T> matrix;
  std::vector<double> degrees;  // D̃ diagonal
  bool self_loops = true;
  bool weighted = false;
};

struct AdjacencyOptions {
  /// Edge weight = number of triples linking the pair instead of 1.
  bool weighted = false;
};

/// Relation labels and triple direction are dropped: (h, t) and (t, h) are
/// both edges iff some triple links h and t. Self-loop triples fold into
/// the identity term.
template <typename T>
NormalizedAdjacency<T> build_adjacency(const MergedGraph& graph, AdjacencyOptions options = {}) {
  const std::size_t n = graph.num_entities();
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> edges;
  for (const auto& t : graph.triples()) {
    if (t.head == t.tail) continue;
    const auto key = std::minmax(t.head, t.tail);
    auto [it, inserted] = edges.emplace(std::pair<std::uint32_t, std::uint32_t>(key.first, key.second), 1.0);
    if (!inserted && options.weighted) it->second += 1.0;
  }

  std::vector<double> degree(n, 1.0);
  for (const auto& [key, w] : edges) {
    degree[key.first] += w;
    degree[key.second] += w;
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

  std::vector<typename SparseMatrix<T>::Entry> entries;
  entries.reserve(n + 2 * edges.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::uint32_t>(i);
    entries.push_back({u, u, static_cast<T>(inv_sqrt[i] * inv_sqrt[i])});
  }
  for (const auto& [key, w] : edges) {
    const auto v = static_cast<T>(w * inv_sqrt[key.first] * inv_sqrt[key.second]);
    entries.push_back({key.first, key.second, v});
    entries.push_back({key.second, key.first, v});
  }
  NormalizedAdjacency<T> adj;
  adj.matrix = SparseMatrix<T>::from_entries(n, n, std::move(entries));
  adj.degrees = std::move(degree);
  adj.weighted = options.weighted;
  return adj;
}

/// Debug dump: one `row col value` line per stored entry.
template <typename T>
void write_coordinate(std::ostream& out, const SparseMatrix<T>& m) {
  out << std::setprecision(std::numeric_limits<T>::max_digits10);
  for (const auto& e : m.entries()) out << e.row << ' ' << e.col << ' ' << e.value << '\n';
}

}  // namespace kgalign
