#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kgalign/error.hpp"

namespace kgalign {

struct Candidate {
  std::uint32_t id = 0;
  double score = 0.0;  // lower is better
};

/// One query: where the true counterpart landed among the candidates.
struct RankedQuery {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  std::size_t rank = 0;  // 1-based
  std::vector<Candidate> top;
};

/// Ranks candidates by ascending score, ties by ascending id, and keeps the first top_k.
inline RankedQuery rank_query(std::uint32_t source, std::uint32_t target, std::vector<Candidate> candidates,
                              std::size_t top_k) {
  RankedQuery q;
  q.source = source;
  q.target = target;
  const auto before = [](const Candidate& a, const Candidate& b) {
    return a.score != b.score ? a.score < b.score : a.id < b.id;
  };
  const auto truth = std::find_if(candidates.begin(), candidates.end(),
                                  [target](const Candidate& c) { return c.id == target; });
  if (truth == candidates.end()) {
    q.rank = candidates.size() + 1;
  } else {
    const Candidate t = *truth;
    q.rank = 1 + static_cast<std::size_t>(std::count_if(candidates.begin(), candidates.end(),
                                                        [&](const Candidate& c) { return before(c, t); }));
  }
  const std::size_t keep = std::min(top_k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                    before);
  candidates.resize(keep);
  q.top = std::move(candidates);
  return q;
}

inline void check_k_list(std::span<const std::size_t> k_list) {
  for (auto k : k_list)
    if (k == 0) throw ArgumentError("Hits@k needs k >= 1");
}

/// Fraction of queries whose counterpart ranks within the top k.
inline double hits_at(std::span<const RankedQuery> queries, std::size_t k) {
  if (k == 0) throw ArgumentError("Hits@k needs k >= 1");
  if (queries.empty()) return 0.0;
  const auto hits = std::count_if(queries.begin(), queries.end(), [k](const RankedQuery& q) { return q.rank <= k; });
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

inline std::map<std::size_t, double> hits_table(std::span<const RankedQuery> queries,
                                                std::span<const std::size_t> k_list) {
  check_k_list(k_list);
  std::map<std::size_t, double> out;
  for (auto k : k_list) out[k] = hits_at(queries, k);
  return out;
}

}  // namespace kgalign
