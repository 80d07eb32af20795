#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace kgalign;
using kgalign::testing::make_graph;
using kgalign::testing::random_matrix;
using Dense = DenseMatrix<double>;

namespace {

std::vector<RankedQuery> with_ranks(std::vector<std::size_t> ranks) {
  std::vector<RankedQuery> q;
  for (std::size_t i = 0; i < ranks.size(); ++i)
    q.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(100 + i), ranks[i], {}});
  return q;
}

AlignmentReport report_of(std::vector<std::pair<EntityPair, std::size_t>> rows) {
  AlignmentReport r;
  for (const auto& [p, rank] : rows) r.forward.push_back({p.source, p.target, rank, {}});
  return r;
}

// Same shape on both sides: 0-1 (r0), 1-2 (r1), 0-3 (r1).
MergedGraph four_entity_graph() {
  const std::vector<Triple> t{{0, 0, 1}, {1, 1, 2}, {0, 1, 3}};
  return make_graph(4, 2, t, 4, 2, t);
}

}  // namespace

TEST(Hits, CountsRanksWithinK) {
  const auto q = with_ranks({1, 3, 12});
  EXPECT_NEAR(hits_at(q, 10), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(hits_at(q, 1), 1.0 / 3.0, 1e-15);
  EXPECT_THROW(hits_at(q, 0), ArgumentError);
}

TEST(AlignEntities, IdenticalCounterpartsAllHit) {
  const auto g = kgalign::testing::six_node_graph();
  Rng rng(1);
  auto x = random_matrix(6, 4, rng);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 4; ++c) x(3 + i, c) = x(i, c);
  const std::vector<EntityPair> test{{0, 3}, {1, 4}, {2, 5}};
  const std::size_t k[] = {1, 10};
  const auto r = align_entities(x, test, g, k);
  EXPECT_EQ(r.hits.at(1), 1.0);
  EXPECT_EQ(r.hits.at(10), 1.0);
}

TEST(AlignEntities, TiesBreakByLowerId) {
  const auto g = kgalign::testing::six_node_graph();
  // Source 0 is equidistant from 4 and 5; the truth is 5, so it ranks second.
  const Dense x(6, 1, std::vector<double>{0.0, 5.0, 9.0, 3.0, 1.0, 1.0});
  const std::size_t k[] = {1};
  const auto r = align_entities(x, std::vector<EntityPair>{{0, 5}, {1, 4}, {2, 3}}, g, k);
  EXPECT_EQ(r.forward[0].rank, 2u);
  EXPECT_EQ(r.forward[0].top[0].id, 4u);
}

TEST(AlignEntities, RanksMatchBruteForceSort) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = kgalign::testing::random_instance(rng, 100);
    const auto x = random_matrix(inst.graph.num_entities(), 3, rng);
    const std::size_t k[] = {1, 5};
    std::vector<EntityId> counterparts, all_g2;
    for (const auto& p : inst.pairs) counterparts.push_back(p.target);
    for (std::size_t e = inst.graph.num_entities(GraphLabel::G1); e < inst.graph.num_entities(); ++e)
      all_g2.push_back(static_cast<EntityId>(e));
    const auto tc = align_entities(x, inst.pairs, inst.graph, k);
    const auto all = align_entities(x, inst.pairs, inst.graph, k, CandidatePolicy::AllOppositeGraph);
    for (std::size_t i = 0; i < inst.pairs.size(); ++i) {
      EXPECT_EQ(tc.forward[i].rank, oracle::rank(x, inst.pairs[i].source, inst.pairs[i].target, counterparts));
      EXPECT_EQ(all.forward[i].rank, oracle::rank(x, inst.pairs[i].source, inst.pairs[i].target, all_g2));
    }
    EXPECT_NEAR(tc.hits.at(1), oracle::hits(x, inst.pairs, 1), 1e-15);
    for (std::size_t kk : {1, 5}) EXPECT_LE(all.hits.at(kk), tc.hits.at(kk));
    EXPECT_LE(tc.hits.at(1), tc.hits.at(5));
  }
}

TEST(AlignEntities, BidirectionalAveragesBothDirections) {
  Rng rng(3);
  const auto inst = kgalign::testing::random_instance(rng);
  const auto x = random_matrix(inst.graph.num_entities(), 2, rng);
  const std::size_t k[] = {1, 3};
  const auto r = align_entities(x, inst.pairs, inst.graph, k, CandidatePolicy::TestCounterparts,
                                Direction::Bidirectional);
  std::vector<EntityId> sources;
  for (const auto& p : inst.pairs) sources.push_back(p.source);
  for (std::size_t kk : {1, 3}) {
    double back = 0.0;
    for (const auto& p : inst.pairs) back += oracle::rank(x, p.target, p.source, sources) <= kk ? 1.0 : 0.0;
    back /= static_cast<double>(inst.pairs.size());
    EXPECT_NEAR(r.hits.at(kk), 0.5 * (oracle::hits(x, inst.pairs, kk) + back), 1e-15);
  }
  EXPECT_EQ(r.backward.size(), inst.pairs.size());
}

TEST(AlignEntities, RejectsBadInput) {
  const auto g = kgalign::testing::six_node_graph();
  const Dense x(6, 1);
  const std::size_t zero[] = {0};
  const std::size_t one[] = {1};
  EXPECT_THROW(align_entities(x, std::vector<EntityPair>{{0, 3}}, g, zero), ArgumentError);
  EXPECT_THROW(align_entities(x, std::vector<EntityPair>{}, g, one), ArgumentError);
}

TEST(Diagnostics, AllCorrectIsOnePartition) {
  const auto g = four_entity_graph();
  const auto r = report_of({{{0, 4}, 1}, {{1, 5}, 1}, {{2, 6}, 1}});
  const auto d = alignment_statistics(g, r, r, {});
  ASSERT_EQ(d.entities.size(), 4u);
  EXPECT_EQ(d.entities[0].name, "pre+joint+");
  EXPECT_EQ(d.entities[0].count, 3u);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(d.entities[i].count, 0u);
}

TEST(Diagnostics, HandCountedFourEntityFixture) {
  const auto g = four_entity_graph();
  const auto pre = report_of({{{0, 4}, 1}, {{1, 5}, 2}, {{2, 6}, 2}});
  const auto joint = report_of({{{0, 4}, 1}, {{1, 5}, 1}, {{2, 6}, 3}});
  RelationReport rel_pre, rel_joint;
  rel_pre.queries = {{0, 2, 1, {}}, {1, 3, 2, {}}};
  rel_joint.queries = {{0, 2, 1, {}}, {1, 3, 1, {}}};
  const std::vector<EntityPair> train{{3, 7}};
  const auto d = alignment_statistics(g, pre, joint, train, &rel_pre, &rel_joint);

  const auto& both = d.entities[0];
  EXPECT_EQ(both.count, 1u);
  EXPECT_EQ(both.mean_neighbor_entities[0], 2.0);
  EXPECT_EQ(both.mean_neighbor_entities[1], 2.0);
  EXPECT_EQ(both.mean_neighbor_relations[0], 2.0);
  EXPECT_EQ(both.pct_with_seed_neighbor, 100.0);
  EXPECT_EQ(both.pct_with_aligned_relation, 100.0);

  const auto& joint_only = d.entities[1];
  EXPECT_EQ(joint_only.name, "pre-joint+");
  EXPECT_EQ(joint_only.count, 1u);
  EXPECT_EQ(joint_only.mean_neighbor_entities[0], 2.0);
  EXPECT_EQ(joint_only.pct_with_seed_neighbor, 0.0);
  EXPECT_EQ(joint_only.pct_with_aligned_relation, 100.0);

  const auto& neither = d.entities[2];
  EXPECT_EQ(neither.count, 1u);
  EXPECT_EQ(neither.mean_neighbor_entities[0], 1.0);
  EXPECT_EQ(neither.mean_neighbor_relations[1], 1.0);
  EXPECT_EQ(neither.pct_with_aligned_relation, 0.0);

  EXPECT_EQ(d.entities[3].count, 0u);

  ASSERT_EQ(d.relations.size(), 4u);
  EXPECT_EQ(d.relations[0].count, 1u);
  EXPECT_EQ(d.relations[0].mean_frequency[0], 1.0);
  EXPECT_EQ(d.relations[1].count, 1u);
  EXPECT_EQ(d.relations[1].mean_frequency[0], 2.0);
  EXPECT_EQ(d.relations[1].mean_frequency[1], 2.0);

  std::ostringstream out;
  write_diagnostics(out, d);
  EXPECT_NE(out.str().find("pre+joint+\t1\t2.00\t2.00\t2.00\t2.00\t100.00\t100.00\n"), std::string::npos) << out.str();
}

TEST(Diagnostics, MismatchedTestSetsThrow) {
  const auto g = four_entity_graph();
  EXPECT_THROW(alignment_statistics(g, report_of({{{0, 4}, 1}}), report_of({{{1, 5}, 1}}), {}), ArgumentError);
}

TEST(Reports, HitsSummaryFormat) {
  std::ostringstream out;
  write_hits_summary(out, "entity.joint", {{1, 1.0}, {10, 2.0 / 3.0}}, 3);
  EXPECT_EQ(out.str(), "entity.joint.queries = 3\nentity.joint.hits@1 = 1.0000\nentity.joint.hits@10 = 0.6667\n");
}

TEST(Reports, SweepCsv) {
  std::ostringstream out;
  const std::vector<SweepRow> rows{{0.1, 0.5, 0.25}};
  write_sweep_csv(out, rows);
  EXPECT_EQ(out.str(), "ratio,entity_hits1,relation_hits1\n0.1,0.5,0.25\n");
}

namespace {

struct SweepFixture {
  SyntheticDataset data;
  HgcnConfig hgcn;
  TrainConfig train;

  SweepFixture() {
    SyntheticSpec spec;
    spec.n_entities = 60;
    spec.n_relations = 4;
    spec.n_triples = 180;
    spec.structural_noise = 0.1;
    spec.feature_noise = 0.1;
    spec.feature_dim = 16;
    spec.rng_seed = 8;
    data = generate_synthetic(spec);
    hgcn.dims = {16, 16, 16};
    hgcn.relation_dim = 16;
    hgcn.rng_seed = 2;
    train.k_neg = 5;
    train.resample_interval = 5;
    train.max_epochs = 40;
  }
};

}  // namespace

TEST(SeedRatioSweep, MoreSeedsDoNotHurt) {
  SweepFixture f;
  const std::vector<double> ratios{0.1, 0.4};
  const auto rows = seed_ratio_sweep<double>(f.data.data, f.data.features, ratios, f.hgcn, f.train, 4);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GE(rows[1].entity_hits1, rows[0].entity_hits1 - 0.05);
}

TEST(SeedRatioSweep, SingleRatioGivesOneRow) {
  SweepFixture f;
  const std::vector<double> ratios{0.3};
  EXPECT_EQ(seed_ratio_sweep<double>(f.data.data, f.data.features, ratios, f.hgcn, f.train, 4).size(), 1u);
  const std::vector<double> bad{1.5};
  EXPECT_THROW(seed_ratio_sweep<double>(f.data.data, f.data.features, bad, f.hgcn, f.train, 4), ArgumentError);
}
