#pragma once

// Checks shared by the unit suites and the acceptance runner. Each returns a
// result struct or an empty string on success, so both drivers can report it.

#include <Eigen/Dense>

#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kgalign/kgalign.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace kgalign::testing {

// ---- gradient of the full joint-stage pipeline ---------------------------------

struct PipelineFixture {
  MergedGraph graph = six_node_graph();
  NormalizedAdjacency<double> adj = build_adjacency<double>(graph);
  HgcnConfig config;
  std::vector<EntityPair> positives{{0, 3}, {1, 4}};
  NegativeSet negatives;
  std::vector<DenseMatrix<double>> inputs;  // features, W0, WT0, bT0, W1, WT1, bT1, WR

  explicit PipelineFixture(std::uint64_t seed = 7) {
    const std::size_t d = 3, m = 2;
    config.num_layers = 2;
    config.dims = {d, d, d};
    config.relation_dim = m;
    Rng rng(seed);
    inputs.push_back(random_matrix(6, d, rng));
    for (int l = 0; l < 2; ++l) {
      inputs.push_back(random_matrix(d, d, rng, 0.8));
      inputs.push_back(random_matrix(d, d, rng, 0.8));
      inputs.push_back(random_matrix(1, d, rng, 0.5));
    }
    inputs.push_back(random_matrix(2 * d, m, rng, 0.8));
    const auto x_prime = hgcn_forward(config, params(), inputs[0], adj);
    negatives = mine_negatives(x_prime, positives, graph, 2);
  }

  ModelParams<double> params() const {
    ModelParams<double> p;
    for (int l = 0; l < 2; ++l) p.layers.push_back({inputs[1 + 3 * l], inputs[2 + 3 * l], inputs[3 + 3 * l]});
    p.relation_transform = inputs[7];
    return p;
  }

  /// Margin loss on X_joint (joint) or on X′ (preliminary), as a tape function of every input.
  TapeFunction loss(bool joint) const {
    return [this, joint](Tape<double>& tape, std::span<const Var> v) {
      BoundParams b;
      for (int l = 0; l < 2; ++l) {
        b.weights.push_back(v[1 + 3 * l]);
        b.gate_weights.push_back(v[2 + 3 * l]);
        b.gate_biases.push_back(v[3 + 3 * l]);
      }
      const Var x = hgcn_forward(tape, config, b, v[0], adj);
      Var emb = x;
      if (joint) emb = joint_entities(tape, x, approximate_relations(tape, x, graph, v[7]), graph);
      return margin_loss(tape, emb, positives, negatives, 1.0);
    };
  }
};

inline GradCheckReport pipeline_grad_check(bool joint, std::uint64_t seed = 7) {
  PipelineFixture f(seed);
  auto inputs = f.inputs;
  if (!joint) inputs.pop_back();
  return grad_check(f.loss(joint), inputs, 1e-6, 1e-4);
}

// ---- oracle equivalence ----------------------------------------------------------

struct OracleSummary {
  std::size_t instances = 0;
  double adjacency = 0.0, relations = 0.0, joint = 0.0, loss = 0.0, hits = 0.0;
  std::size_t negative_mismatches = 0;

  double worst() const { return std::max({adjacency, relations, joint, loss, hits}); }
};

inline OracleSummary oracle_equivalence(std::size_t instances, std::uint64_t seed) {
  OracleSummary s;
  Rng rng(seed);
  for (std::size_t i = 0; i < instances; ++i) {
    const auto inst = random_instance(rng, 50);
    const auto& g = inst.graph;
    const std::size_t d = 1 + uniform_index(rng, 5);
    const auto x = random_matrix(g.num_entities(), d, rng);
    const auto w_r = random_matrix(2 * d, 1 + uniform_index(rng, 4), rng);

    const auto adj = build_adjacency<double>(g);
    s.adjacency = std::max(s.adjacency, oracle::max_abs_diff(adj.matrix.to_dense(), oracle::adjacency(g)));

    const auto rel = approximate_relations<double>(x, g, w_r);
    const auto rel_ref = oracle::relations(x, g, &w_r);
    s.relations = std::max(s.relations, oracle::max_abs_diff(rel, rel_ref));
    s.relations = std::max(s.relations, oracle::max_abs_diff(approximate_relations<double>(x, g, std::nullopt),
                                                             oracle::relations(x, g, nullptr)));

    s.joint = std::max(s.joint, oracle::max_abs_diff(joint_entities(x, rel, g), oracle::joint(x, rel_ref, g)));

    const std::size_t n_pos = 1 + uniform_index(rng, inst.pairs.size());
    const std::vector<EntityPair> pos(inst.pairs.begin(), inst.pairs.begin() + static_cast<std::ptrdiff_t>(n_pos));
    const std::size_t pool =
        std::min(g.num_entities(GraphLabel::G1), g.num_entities(GraphLabel::G2)) - 1;
    const std::size_t k = 1 + uniform_index(rng, pool);
    const auto neg = mine_negatives(x, pos, g, k);
    if (neg.pairs != oracle::negatives(x, pos, g, k)) ++s.negative_mismatches;

    const double gamma = 0.1 + 2.0 * Gaussian::uniform01(rng);
    Tape<double> tape;
    const double loss = tape.value(margin_loss(tape, tape.constant(x), pos, neg, gamma))(0, 0);
    const double ref = oracle::margin_loss(x, pos, neg, gamma);
    s.loss = std::max(s.loss, std::abs(loss - ref) / std::max(1.0, std::abs(ref)));

    const std::vector<std::size_t> ks{1, 3, 10};
    const auto report = align_entities(x, inst.pairs, g, ks);
    for (auto kk : ks) s.hits = std::max(s.hits, std::abs(report.hits.at(kk) - oracle::hits(x, inst.pairs, kk)));
    ++s.instances;
  }
  return s;
}

// ---- properties -------------------------------------------------------------------

inline std::string check_highway_convex(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + uniform_index(rng, 8), d = 1 + uniform_index(rng, 6);
    const auto in = random_matrix(n, d, rng, 3.0), nw = random_matrix(n, d, rng, 3.0);
    Tape<double> tape;
    const Var out = highway_combine(tape, tape.constant(in), tape.constant(nw),
                                    tape.constant(random_matrix(d, d, rng, 2.0)),
                                    tape.constant(random_matrix(1, d, rng, 2.0)));
    const auto& o = tape.value(out);
    for (std::size_t i = 0; i < o.size(); ++i) {
      const double lo = std::min(in.data()[i], nw.data()[i]), hi = std::max(in.data()[i], nw.data()[i]);
      const double slack = 1e-12 * std::max(1.0, std::abs(hi));
      if (o.data()[i] < lo - slack || o.data()[i] > hi + slack)
        return "highway output " + std::to_string(o.data()[i]) + " outside [" + std::to_string(lo) + ", " +
               std::to_string(hi) + "]";
    }
  }
  return {};
}

/// Largest |eigenvalue| by power iteration on a symmetric matrix.
inline double power_iteration(const DenseMatrix<double>& a, std::size_t iters = 2000) {
  const std::size_t n = a.rows();
  std::vector<double> v(n, 1.0), w(n);
  for (std::size_t i = 0; i < n; ++i) v[i] += 0.01 * static_cast<double>(i);
  double lambda = 0.0;
  for (std::size_t it = 0; it < iters; ++it) {
    // A² has the same dominant eigenvector for ±λ, so iterate on A² to avoid sign oscillation.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += a(i, j) * v[j];
        w[i] = s;
      }
      v.swap(w);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (double& x : v) x /= norm;
    lambda = std::sqrt(norm);
  }
  return lambda;
}

inline std::string check_adjacency_spectrum(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto inst = random_instance(rng, 50);
    const auto a = build_adjacency<double>(inst.graph).matrix.to_dense();
    const std::size_t n = a.rows();
    Eigen::MatrixXd e(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (a(i, j) != a(j, i)) return "adjacency not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")";
        e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
      }
    const double exact = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e).eigenvalues().cwiseAbs().maxCoeff();
    const double power = power_iteration(a);
    if (exact > 1.0 + 1e-12) return "spectral radius " + std::to_string(exact) + " exceeds 1";
    if (power > 1.0 + 1e-9) return "power iteration radius " + std::to_string(power) + " exceeds 1";
    if (std::abs(power - exact) > 1e-6)
      return "power iteration " + std::to_string(power) + " disagrees with eigen-solver " + std::to_string(exact);
  }
  return {};
}

inline std::string check_hits_monotone(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto inst = random_instance(rng, 50);
    const auto x = random_matrix(inst.graph.num_entities(), 3, rng);
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k <= inst.pairs.size() + 1; ++k) ks.push_back(k);
    for (auto policy : {CandidatePolicy::TestCounterparts, CandidatePolicy::AllOppositeGraph}) {
      const auto r = align_entities(x, inst.pairs, inst.graph, ks, policy);
      double prev = 0.0;
      for (auto k : ks) {
        if (r.hits.at(k) < prev) return "Hits@" + std::to_string(k) + " decreased";
        prev = r.hits.at(k);
      }
      if (r.hits.at(inst.pairs.size()) != 1.0 && policy == CandidatePolicy::TestCounterparts)
        return "Hits@|candidates| below 1";
    }
  }
  return {};
}

inline std::string check_negatives_exclude_truth(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto inst = random_instance(rng, 50);
    // Identical embeddings for each true pair make the partner the nearest candidate.
    auto x = random_matrix(inst.graph.num_entities(), 4, rng);
    for (const auto& p : inst.pairs)
      for (std::size_t c = 0; c < x.cols(); ++c) x(p.target, c) = x(p.source, c);
    const std::size_t pool =
        std::min(inst.graph.num_entities(GraphLabel::G1), inst.graph.num_entities(GraphLabel::G2)) - 1;
    const auto neg = mine_negatives(x, inst.pairs, inst.graph, 1 + uniform_index(rng, pool));
    const std::set<std::pair<EntityId, EntityId>> truth = [&] {
      std::set<std::pair<EntityId, EntityId>> s;
      for (const auto& p : inst.pairs) s.insert({p.source, p.target});
      return s;
    }();
    for (const auto& p : neg.pairs)
      if (truth.contains({p.source, p.target}))
        return "negative (" + std::to_string(p.source) + ", " + std::to_string(p.target) + ") is a true pair";
  }
  return {};
}

/// s must drop as more training seeds link the two relations' endpoints.
inline std::string check_relation_distance_monotone() {
  // r0 in G1: 0→1, 2→3, 4→5; r1 in G2 mirrors it on globals 6..11.
  const auto g = make_graph(6, 1, {{0, 0, 1}, {2, 0, 3}, {4, 0, 5}}, 6, 1, {{0, 0, 1}, {2, 0, 3}, {4, 0, 5}});
  Rng rng(3);
  const auto rel = random_matrix(2, 4, rng);
  std::vector<EntityPair> seeds;
  double prev = relation_distance<double>(0, 1, rel, g, seeds, 20.0);
  for (EntityId e = 0; e < 6; ++e) {
    seeds.push_back({e, static_cast<EntityId>(6 + e)});
    const double s = relation_distance<double>(0, 1, rel, g, seeds, 20.0);
    if (!(s < prev)) return "s did not decrease when |P| grew to " + std::to_string(seeds.size());
    prev = s;
  }
  return {};
}

inline std::string check_determinism() {
  SyntheticSpec spec;
  spec.n_entities = 40;
  spec.n_relations = 4;
  spec.n_triples = 120;
  spec.structural_noise = 0.1;
  spec.feature_noise = 0.1;
  spec.feature_dim = 8;
  spec.rng_seed = 11;
  const auto a = generate_synthetic(spec), b = generate_synthetic(spec);
  if (a.data.graph.graphs() != b.data.graph.graphs() || a.data.reference != b.data.reference || !(a.features.vectors == b.features.vectors))
    return "generate_synthetic differs between runs";
  if (split_seeds(a.data.reference, 0.3, 5, 0.1).train != split_seeds(a.data.reference, 0.3, 5, 0.1).train)
    return "split_seeds differs between runs";

  HgcnConfig h;
  h.dims = {8, 8, 8};
  h.relation_dim = 8;
  h.rng_seed = 4;
  TrainConfig t;
  t.k_neg = 5;
  t.resample_interval = 5;
  t.max_epochs = 30;
  t.rng_seed = 4;
  const auto adj = build_adjacency<double>(a.data.graph);
  const auto f = a.features.vectors;
  const auto r1 = train(a.data.graph, adj, f, a.seeds, h, t);
  const auto r2 = train(a.data.graph, adj, f, a.seeds, h, t);
  if (!(r1.params == r2.params)) return "training differs between runs";
  const auto n1 = mine_negatives(hgcn_forward(h, r1.params, f, adj), a.seeds.train, a.data.graph, 5);
  const auto n2 = mine_negatives(hgcn_forward(h, r2.params, f, adj), a.seeds.train, a.data.graph, 5);
  if (n1.pairs != n2.pairs) return "mine_negatives differs between runs";
  return {};
}

// ---- synthetic benchmarks ----------------------------------------------------------

/// Desk-scale settings: 64-d features and layers, K = 25 negatives, re-mined
/// and validated every 10 epochs, at most 300 epochs.
struct BenchmarkSetup {
  SyntheticSpec spec;
  HgcnConfig hgcn;
  TrainConfig train;

  BenchmarkSetup(double noise, double seed_fraction, std::uint64_t seed) {
    spec.n_entities = 200;
    spec.n_relations = 10;
    spec.n_triples = 600;
    spec.structural_noise = noise;
    spec.feature_noise = noise;
    spec.seed_fraction = seed_fraction;
    spec.feature_dim = 64;
    spec.validation_fraction = 0.1;
    spec.rng_seed = derive_seed(seed, "benchmark_data");
    hgcn.num_layers = 2;
    hgcn.dims = {64, 64, 64};
    hgcn.relation_dim = 64;
    hgcn.rng_seed = derive_seed(seed, "benchmark_model");
    train.k_neg = 25;
    train.resample_interval = 10;
    train.max_epochs = 300;
    train.pretrain_patience = 3;
    train.rng_seed = derive_seed(seed, "benchmark_train");
  }
};

template <typename T = float>
ExperimentResult run_benchmark(const BenchmarkSetup& setup) {
  const auto ds = generate_synthetic(setup.spec);
  return run_experiment<T>(ds.data, ds.seeds, ds.features, setup.hgcn, setup.train);
}

}  // namespace kgalign::testing
