#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/kg_core.hpp"
#include "kgalign/log.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/random.hpp"

namespace kgalign {

namespace fs = std::filesystem;

/// File names of the DBP15K directory layout.
namespace layout {
inline constexpr const char* kEntityIds[2] = {"ent_ids_1", "ent_ids_2"};
inline constexpr const char* kRelationIds[2] = {"rel_ids_1", "rel_ids_2"};
inline constexpr const char* kTriples[2] = {"triples_1", "triples_2"};
inline constexpr const char* kEntityNames[2] = {"ent_names_1", "ent_names_2"};  // optional
inline constexpr const char* kReferencePairs = "ref_ent_ids";
inline constexpr const char* kRelationPairs = "ref_rel_ids";  // optional
inline constexpr const char* kVectors = "vectors.txt";        // optional, synthetic output
}  // namespace layout

/// One feature row per merged-graph entity.
struct FeatureTable {
  std::size_t dim = 0;
  DenseMatrix<double> vectors;
  /// Fraction of entities whose vector came from matched tokens rather than the fallback.
  double coverage = 0.0;
};

struct Dataset {
  MergedGraph graph;
  std::vector<EntityPair> reference;  // global entity indices
  RelationTestSet relation_tests;     // global relation indices
  std::vector<std::string> names;     // per global entity, used for feature lookup
};

// ---- text helpers ----------------------------------------------------------

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim_cr(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

inline std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline std::uint32_t parse_id(std::string_view field, const fs::path& path, std::size_t line_no) {
  std::uint32_t value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty())
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected an integer id, got '" +
                     std::string(field) + "'");
  return value;
}

inline double parse_real(std::string_view field, const fs::path& path, std::size_t line_no) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty())
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected a number, got '" +
                     std::string(field) + "'");
  return value;
}

template <typename T>
std::string format_real(T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

/// Visits non-empty lines with 1-based line numbers.
template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim_cr(line);
    if (view.empty()) continue;
    fn(view, line_no);
  }
}

}  // namespace detail

/// `<id>\t<uri-or-name>` lines.
inline std::vector<std::pair<std::uint32_t, std::string>> read_id_file(const fs::path& path) {
  std::vector<std::pair<std::uint32_t, std::string>> rows;
  detail::for_each_line(path, [&](std::string_view line, std::size_t no) {
    const auto fields = detail::split_tabs(line);
    if (fields.size() < 2)
      throw ParseError(path.string() + ":" + std::to_string(no) + ": expected '<id>\\t<name>'");
    rows.emplace_back(detail::parse_id(fields[0], path, no), std::string(fields[1]));
  });
  return rows;
}

inline std::vector<Triple> read_triple_file(const fs::path& path) {
  std::vector<Triple> rows;
  detail::for_each_line(path, [&](std::string_view line, std::size_t no) {
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 3)
      throw ParseError(path.string() + ":" + std::to_string(no) + ": expected 3 tab-separated ids");
    rows.push_back({detail::parse_id(fields[0], path, no), detail::parse_id(fields[1], path, no),
                    detail::parse_id(fields[2], path, no)});
  });
  return rows;
}

inline std::vector<std::pair<std::uint32_t, std::uint32_t>> read_pair_file(const fs::path& path) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> rows;
  detail::for_each_line(path, [&](std::string_view line, std::size_t no) {
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 2)
      throw ParseError(path.string() + ":" + std::to_string(no) + ": expected 2 tab-separated ids");
    rows.emplace_back(detail::parse_id(fields[0], path, no), detail::parse_id(fields[1], path, no));
  });
  return rows;
}

/// Last path segment of a URI with underscores turned into spaces.
inline std::string name_from_uri(std::string_view uri) {
  const auto slash = uri.find_last_of('/');
  std::string name(slash == std::string_view::npos ? uri : uri.substr(slash + 1));
  std::replace(name.begin(), name.end(), '_', ' ');
  return name;
}

/// Lowercased, punctuation-stripped, whitespace-split tokens. Only ASCII is
/// case-folded or stripped; other bytes pass through untouched.
inline std::vector<std::string> name_tokens(std::string_view name) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : name) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (c < 128 && std::ispunct(c)) {
      continue;
    } else {
      current.push_back(c < 128 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// ---- DBP15K layout ---------------------------------------------------------

struct LoadOptions {
  /// Drop relations with no triples (they cannot be averaged) instead of failing later.
  bool prune_unused_relations = true;
};

/// Reads a DBP15K-style directory. Raw ids are kept as the graphs' local ids;
/// global indices follow file order.
inline Dataset load_dbp15k(const fs::path& dir, LoadOptions options = {}) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  std::array<KnowledgeGraph, 2> graphs;
  std::array<std::vector<std::string>, 2> names;
  for (int k = 0; k < 2; ++k) {
    const auto label = static_cast<GraphLabel>(k);
    const auto ents = read_id_file(dir / layout::kEntityIds[k]);
    const auto rels = read_id_file(dir / layout::kRelationIds[k]);
    auto triples = read_triple_file(dir / layout::kTriples[k]);

    std::vector<EntityId> ent_ids;
    std::vector<std::string> ent_uris;
    for (const auto& [id, uri] : ents) {
      ent_ids.push_back(id);
      ent_uris.push_back(uri);
    }
    std::vector<RelationId> rel_ids;
    std::vector<std::string> rel_uris;
    std::unordered_set<RelationId> used;
    for (const auto& t : triples) used.insert(t.relation);
    std::size_t pruned = 0;
    for (const auto& [id, uri] : rels) {
      if (options.prune_unused_relations && !used.contains(id)) {
        ++pruned;
        continue;
      }
      rel_ids.push_back(id);
      rel_uris.push_back(uri);
    }
    if (pruned > 0)
      log_warn("pruned " + std::to_string(pruned) + " relations without triples from " + to_string(label));

    names[k].reserve(ent_uris.size());
    for (const auto& uri : ent_uris) names[k].push_back(name_from_uri(uri));
    const auto names_path = dir / layout::kEntityNames[k];
    graphs[k] = KnowledgeGraph::create(label, std::move(ent_ids), std::move(rel_ids), std::move(triples),
                                       std::move(ent_uris), std::move(rel_uris));
    if (fs::exists(names_path)) {
      for (const auto& [id, name] : read_id_file(names_path)) {
        const auto pos = graphs[k].entity_position(id);
        if (!pos)
          throw StructuralError(names_path.string() + ": unknown entity id " + std::to_string(id));
        names[k][*pos] = name;
      }
    }
  }

  Dataset ds;
  ds.graph = merge_graphs(std::move(graphs[0]), std::move(graphs[1]));
  ds.names = std::move(names[0]);
  ds.names.insert(ds.names.end(), names[1].begin(), names[1].end());

  const auto ref_path = dir / layout::kReferencePairs;
  for (const auto& [a, b] : read_pair_file(ref_path)) {
    const auto pa = ds.graph.graph(GraphLabel::G1).entity_position(a);
    const auto pb = ds.graph.graph(GraphLabel::G2).entity_position(b);
    if (!pa || !pb)
      throw StructuralError(ref_path.string() + ": pair (" + std::to_string(a) + ", " + std::to_string(b) +
                            ") references an unknown entity");
    ds.reference.push_back({ds.graph.global_entity(GraphLabel::G1, a), ds.graph.global_entity(GraphLabel::G2, b)});
  }
  check_one_to_one(ds.reference);

  const auto rel_path = dir / layout::kRelationPairs;
  if (fs::exists(rel_path)) {
    std::size_t skipped = 0;
    for (const auto& [a, b] : read_pair_file(rel_path)) {
      const auto pa = ds.graph.graph(GraphLabel::G1).relation_position(a);
      const auto pb = ds.graph.graph(GraphLabel::G2).relation_position(b);
      if (!pa || !pb) {
        ++skipped;
        continue;
      }
      ds.relation_tests.pairs.push_back(
          {ds.graph.global_relation(GraphLabel::G1, a), ds.graph.global_relation(GraphLabel::G2, b)});
    }
    if (skipped > 0)
      log_warn("skipped " + std::to_string(skipped) + " relation test pairs naming unknown or unused relations");
  }
  return ds;
}

/// Writes the DBP15K layout using each graph's local ids and URI side tables.
inline void write_dbp15k(const fs::path& dir, const MergedGraph& graph, const std::vector<EntityPair>& reference,
                         const RelationTestSet& relation_tests) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (int k = 0; k < 2; ++k) {
    const auto& g = graph.graph(static_cast<GraphLabel>(k));
    {
      auto out = detail::open_output(dir / layout::kEntityIds[k]);
      for (std::size_t i = 0; i < g.num_entities(); ++i)
        out << g.entities()[i] << '\t'
            << (g.entity_names().empty() ? "entity/" + std::to_string(g.entities()[i]) : g.entity_names()[i])
            << '\n';
    }
    {
      auto out = detail::open_output(dir / layout::kRelationIds[k]);
      for (std::size_t i = 0; i < g.num_relations(); ++i)
        out << g.relations()[i] << '\t'
            << (g.relation_names().empty() ? "relation/" + std::to_string(g.relations()[i])
                                           : g.relation_names()[i])
            << '\n';
    }
    {
      auto out = detail::open_output(dir / layout::kTriples[k]);
      for (const auto& t : g.triples()) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
    }
  }
  {
    auto out = detail::open_output(dir / layout::kReferencePairs);
    for (const auto& p : reference)
      out << graph.local_entity(p.source).second << '\t' << graph.local_entity(p.target).second << '\n';
  }
  if (!relation_tests.pairs.empty()) {
    auto out = detail::open_output(dir / layout::kRelationPairs);
    for (const auto& p : relation_tests.pairs)
      out << graph.local_relation(p.source).second << '\t' << graph.local_relation(p.target).second << '\n';
  }
}

// ---- features --------------------------------------------------------------

/// Scans a `<token> <f1> ... <fd>` file and keeps only the requested tokens.
/// A leading two-field header line (`count dim`) is skipped.
inline std::unordered_map<std::string, std::vector<double>> load_word_vectors(
    const fs::path& path, const std::unordered_set<std::string>& vocabulary, std::size_t dim) {
  std::unordered_map<std::string, std::vector<double>> table;
  bool first = true;
  detail::for_each_line(path, [&](std::string_view line, std::size_t no) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (start < line.size()) {
      const auto pos = line.find(' ', start);
      const auto end = pos == std::string_view::npos ? line.size() : pos;
      if (end > start) fields.push_back(line.substr(start, end - start));
      start = end + 1;
    }
    if (first) {
      first = false;
      if (fields.size() == 2 && dim != 1) return;  // `count dim` header
      if (fields.size() != dim + 1)
        throw ConfigError(path.string() + ": word vectors have dimension " + std::to_string(fields.size() - 1) +
                          ", configured dimension is " + std::to_string(dim));
    }
    if (fields.size() < dim + 1)
      throw ParseError(path.string() + ":" + std::to_string(no) + ": expected a token and " +
                       std::to_string(dim) + " values");
    // Tokens may themselves contain spaces; the last dim fields are the vector.
    const std::size_t token_fields = fields.size() - dim;
    std::string token(fields[0]);
    for (std::size_t i = 1; i < token_fields; ++i) {
      token += ' ';
      token += fields[i];
    }
    if (!vocabulary.contains(token) || table.contains(token)) return;
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = detail::parse_real(fields[token_fields + i], path, no);
    table.emplace(std::move(token), std::move(v));
  });
  return table;
}

inline constexpr double kFallbackStddev = 0.3;

namespace detail {
inline void fill_fallback(std::span<double> row, std::uint64_t rng_seed, std::size_t entity) {
  Rng rng(derive_seed(derive_seed(rng_seed, "feature_fallback"), static_cast<std::uint64_t>(entity)));
  Gaussian gauss(kFallbackStddev);
  for (auto& v : row) v = gauss(rng);
}
}  // namespace detail

/// Mean of the word vectors of each entity's name tokens. Entities with no
/// matched token (or a zero mean) get a seeded Gaussian fallback.
inline FeatureTable build_features(const MergedGraph& graph, const std::vector<std::string>& names,
                                   const fs::path& word_vectors, std::size_t dim, std::uint64_t rng_seed) {
  if (dim == 0) throw ArgumentError("feature dimension must be positive");
  if (names.size() != graph.num_entities())
    throw ArgumentError("expected one name per entity (" + std::to_string(graph.num_entities()) + "), got " +
                        std::to_string(names.size()));
  std::vector<std::vector<std::string>> tokens(names.size());
  std::unordered_set<std::string> vocabulary;
  for (std::size_t i = 0; i < names.size(); ++i) {
    tokens[i] = name_tokens(names[i]);
    vocabulary.insert(tokens[i].begin(), tokens[i].end());
  }
  const auto table = load_word_vectors(word_vectors, vocabulary, dim);

  FeatureTable features;
  features.dim = dim;
  features.vectors = DenseMatrix<double>(names.size(), dim);
  std::size_t matched_entities = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto row = features.vectors.row(i);
    std::size_t matched = 0;
    for (const auto& tok : tokens[i]) {
      auto it = table.find(tok);
      if (it == table.end()) continue;
      ++matched;
      for (std::size_t c = 0; c < dim; ++c) row[c] += it->second[c];
    }
    bool nonzero = false;
    if (matched > 0) {
      for (auto& v : row) {
        v /= static_cast<double>(matched);
        nonzero = nonzero || v != 0.0;
      }
    }
    if (nonzero) {
      ++matched_entities;
    } else {
      detail::fill_fallback(row, rng_seed, i);
    }
  }
  features.coverage =
      names.empty() ? 0.0 : static_cast<double>(matched_entities) / static_cast<double>(names.size());
  log_info("feature coverage " + std::to_string(features.coverage));
  return features;
}

/// Standard Gaussian features, one independent stream per entity.
inline FeatureTable random_features(const MergedGraph& graph, std::size_t dim, std::uint64_t rng_seed) {
  if (dim == 0) throw ArgumentError("feature dimension must be positive");
  FeatureTable features;
  features.dim = dim;
  features.vectors = DenseMatrix<double>(graph.num_entities(), dim);
  const auto base = derive_seed(rng_seed, "random_features");
  for (std::size_t i = 0; i < graph.num_entities(); ++i) {
    Rng rng(derive_seed(base, static_cast<std::uint64_t>(i)));
    Gaussian gauss(1.0);
    for (auto& v : features.vectors.row(i)) v = gauss(rng);
  }
  features.coverage = 0.0;
  return features;
}

/// Writes one `<token> <values...>` line per entity, using the entity's name as token.
inline void write_word_vectors(const fs::path& path, const std::vector<std::string>& tokens,
                               const FeatureTable& features) {
  auto out = detail::open_output(path);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out << tokens[i];
    for (double v : features.vectors.row(i)) out << ' ' << detail::format_real(v);
    out << '\n';
  }
}

// ---- synthetic pairs -------------------------------------------------------

struct SyntheticSpec {
  std::size_t n_entities = 200;
  std::size_t n_relations = 10;
  std::size_t n_triples = 600;
  double structural_noise = 0.0;
  double feature_noise = 0.0;
  double seed_fraction = 0.3;
  std::size_t feature_dim = 32;
  double validation_fraction = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const {
    auto fraction = [](double v, const char* what) {
      if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError(std::string(what) + " must lie in [0, 1]");
    };
    fraction(structural_noise, "structural_noise");
    fraction(seed_fraction, "seed_fraction");
    fraction(validation_fraction, "validation_fraction");
    if (!(feature_noise >= 0.0)) throw ArgumentError("feature_noise must be non-negative");
    if (n_entities == 0 || n_relations == 0 || n_triples == 0 || feature_dim == 0)
      throw ArgumentError("synthetic counts must be positive");
    const double capacity =
        static_cast<double>(n_entities) * static_cast<double>(n_entities) * static_cast<double>(n_relations);
    if (static_cast<double>(n_triples) > capacity)
      throw ArgumentError("n_triples exceeds n_entities^2 * n_relations");
    if (n_triples < n_relations) throw ArgumentError("n_triples must cover every relation at least once");
  }
};

struct SyntheticDataset {
  Dataset data;
  AlignmentSeeds seeds;
  FeatureTable features;
  /// Number of G2 triples that are not images of G1 triples.
  std::size_t rewired = 0;
};

/// G1 is a random multi-relational graph; G2 is a relabeled copy (entity and
/// relation ids permuted) with a fraction of triples rewired and Gaussian
/// noise added to its features.
inline SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t ne = spec.n_entities, nr = spec.n_relations;
  Rng rng(derive_seed(spec.rng_seed, "synthetic_graph"));

  // G1 triples: relation i is guaranteed by triple i, the rest uniform without repeats.
  std::set<Triple> seen;
  std::vector<Triple> g1;
  g1.reserve(spec.n_triples);
  const double capacity = static_cast<double>(ne) * static_cast<double>(ne) * static_cast<double>(nr);
  if (static_cast<double>(spec.n_triples) > 0.5 * capacity) {
    std::vector<Triple> all;
    for (std::uint32_t h = 0; h < ne; ++h)
      for (std::uint32_t r = 0; r < nr; ++r)
        for (std::uint32_t t = 0; t < ne; ++t) all.push_back({h, r, t});
    portable_shuffle(all, rng);
    // Move one triple per relation to the front.
    std::vector<char> covered(nr, 0);
    std::vector<Triple> front, rest;
    for (const auto& t : all) {
      if (!covered[t.relation]) {
        covered[t.relation] = 1;
        front.push_back(t);
      } else {
        rest.push_back(t);
      }
    }
    g1 = front;
    g1.insert(g1.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(spec.n_triples - front.size()));
  } else {
    while (g1.size() < spec.n_triples) {
      Triple t{static_cast<std::uint32_t>(uniform_index(rng, ne)),
               g1.size() < nr ? static_cast<std::uint32_t>(g1.size())
                              : static_cast<std::uint32_t>(uniform_index(rng, nr)),
               static_cast<std::uint32_t>(uniform_index(rng, ne))};
      if (seen.insert(t).second) g1.push_back(t);
    }
  }

  // Relabeling permutations; G2 local ids are offset by ne so that raw ids stay disjoint.
  std::vector<std::uint32_t> ent_perm(ne), rel_perm(nr);
  for (std::uint32_t i = 0; i < ne; ++i) ent_perm[i] = i;
  for (std::uint32_t i = 0; i < nr; ++i) rel_perm[i] = i;
  portable_shuffle(ent_perm, rng);
  portable_shuffle(rel_perm, rng);
  const auto e_off = static_cast<std::uint32_t>(ne);
  const auto r_off = static_cast<std::uint32_t>(nr);

  std::vector<Triple> g2;
  g2.reserve(g1.size());
  for (const auto& t : g1)
    g2.push_back({e_off + ent_perm[t.head], r_off + rel_perm[t.relation], e_off + ent_perm[t.tail]});

  const std::set<Triple> image(g2.begin(), g2.end());
  std::set<Triple> current = image;
  const auto n_rewire = static_cast<std::size_t>(std::llround(spec.structural_noise * static_cast<double>(g2.size())));
  std::vector<std::size_t> order(g2.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  portable_shuffle(order, rng);
  for (std::size_t k = 0; k < n_rewire; ++k) {
    auto& t = g2[order[k]];
    bool done = false;
    for (int attempt = 0; attempt < 10000 && !done; ++attempt) {
      Triple cand = t;
      const auto e = e_off + static_cast<std::uint32_t>(uniform_index(rng, ne));
      if (uniform_index(rng, 2) == 0)
        cand.head = e;
      else
        cand.tail = e;
      if (image.contains(cand) || current.contains(cand)) continue;
      current.erase(t);
      current.insert(cand);
      t = cand;
      done = true;
    }
    if (!done) throw ArgumentError("graph too dense to rewire the requested fraction of triples");
  }

  auto make_graph = [&](GraphLabel label, std::uint32_t eo, std::uint32_t ro, std::vector<Triple> triples) {
    std::vector<EntityId> ents(ne);
    std::vector<RelationId> rels(nr);
    std::vector<std::string> ent_names(ne), rel_names(nr);
    const std::string tag = label == GraphLabel::G1 ? "g1" : "g2";
    for (std::uint32_t i = 0; i < ne; ++i) {
      ents[i] = eo + i;
      ent_names[i] = "http://synthetic.kg/" + tag + "/" + tag + "e" + std::to_string(i);
    }
    for (std::uint32_t i = 0; i < nr; ++i) {
      rels[i] = ro + i;
      rel_names[i] = "http://synthetic.kg/" + tag + "/rel" + std::to_string(i);
    }
    return KnowledgeGraph::create(label, std::move(ents), std::move(rels), std::move(triples),
                                  std::move(ent_names), std::move(rel_names));
  };

  SyntheticDataset out;
  out.rewired = n_rewire;
  out.data.graph = merge_graphs(make_graph(GraphLabel::G1, 0, 0, std::move(g1)),
                                make_graph(GraphLabel::G2, e_off, r_off, std::move(g2)));
  const auto& graph = out.data.graph;
  for (std::size_t i = 0; i < graph.num_entities(); ++i) {
    const auto label = graph.entity_graph(static_cast<EntityId>(i));
    out.data.names.push_back(name_from_uri(graph.graph(label).entity_names()[i - graph.entity_offset(label)]));
  }
  for (std::uint32_t i = 0; i < ne; ++i)
    out.data.reference.push_back({graph.global_entity(GraphLabel::G1, i), graph.global_entity(GraphLabel::G2, e_off + ent_perm[i])});
  for (std::uint32_t r = 0; r < nr; ++r)
    out.data.relation_tests.pairs.push_back(
        {graph.global_relation(GraphLabel::G1, r), graph.global_relation(GraphLabel::G2, r_off + rel_perm[r])});

  out.seeds = detail::split_pairs(out.data.reference, spec.seed_fraction, spec.validation_fraction,
                                  derive_seed(spec.rng_seed, "synthetic_seeds"));

  // Features: Gaussian for G1, copied to counterparts in G2 plus noise.
  out.features.dim = spec.feature_dim;
  out.features.vectors = DenseMatrix<double>(graph.num_entities(), spec.feature_dim);
  out.features.coverage = 1.0;
  Rng feat_rng(derive_seed(spec.rng_seed, "synthetic_features"));
  Gaussian unit(1.0);
  Gaussian noise(1.0);
  for (const auto& p : out.data.reference) {
    auto src = out.features.vectors.row(p.source);
    auto dst = out.features.vectors.row(p.target);
    for (std::size_t c = 0; c < spec.feature_dim; ++c) {
      src[c] = unit(feat_rng);
      dst[c] = src[c] + spec.feature_noise * noise(feat_rng);
    }
  }
  return out;
}

/// Writes the DBP15K layout plus a `vectors.txt` word-vector file keyed by
/// entity name, so the dataset reloads through the regular feature path.
inline void write_synthetic(const fs::path& dir, const SyntheticDataset& ds) {
  write_dbp15k(dir, ds.data.graph, ds.data.reference, ds.data.relation_tests);
  std::vector<std::string> tokens;
  tokens.reserve(ds.data.names.size());
  for (const auto& name : ds.data.names) {
    const auto toks = name_tokens(name);
    if (toks.size() != 1) throw StructuralError("synthetic entity name must be a single token: " + name);
    tokens.push_back(toks.front());
  }
  write_word_vectors(dir / layout::kVectors, tokens, ds.features);
}

}  // namespace kgalign
