#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace kgalign;
using kgalign::testing::make_graph;
using kgalign::testing::random_matrix;
using Dense = DenseMatrix<double>;

namespace {

double loss_of(const Dense& x, const std::vector<EntityPair>& pos, const NegativeSet& neg, double gamma) {
  Tape<double> t;
  return t.value(margin_loss(t, t.constant(x), pos, neg, gamma))(0, 0);
}

struct SmallRun {
  SyntheticDataset data;
  NormalizedAdjacency<double> adj;
  HgcnConfig hgcn;
  TrainConfig train;

  explicit SmallRun(std::size_t entities = 30, double seed_fraction = 0.4) {
    SyntheticSpec spec;
    spec.n_entities = entities;
    spec.n_relations = 4;
    spec.n_triples = 3 * entities;
    spec.seed_fraction = seed_fraction;
    spec.validation_fraction = 0.1;
    spec.feature_dim = 8;
    spec.rng_seed = 21;
    data = generate_synthetic(spec);
    adj = build_adjacency<double>(data.data.graph);
    hgcn.dims = {8, 8, 8};
    hgcn.relation_dim = 8;
    hgcn.rng_seed = 5;
    train.k_neg = 5;
    train.resample_interval = 5;
    train.max_epochs = 20;
    train.rng_seed = 5;
  }

  TrainResult<double> run(const TrainHooks<double>& hooks = {}) const {
    return kgalign::train(data.data.graph, adj, data.features.vectors, data.seeds, hgcn, train, hooks);
  }
};

}  // namespace

TEST(MarginLoss, SingleTermByHand) {
  const Dense x(3, 1, std::vector<double>{0.0, 0.2, 0.9});
  NegativeSet neg{{{0, 2}}, {0}, 0};
  EXPECT_NEAR(loss_of(x, {{0, 1}}, neg, 1.0), 0.3, 1e-12);
}

TEST(MarginLoss, InactiveAndOffsetHinges) {
  const Dense far(3, 1, std::vector<double>{0.0, 0.5, 2.0});
  NegativeSet neg{{{0, 2}}, {0}, 0};
  EXPECT_EQ(loss_of(far, {{0, 1}}, neg, 1.0), 0.0);
  const Dense equal(3, 1, std::vector<double>{0.0, 0.7, 0.7});
  EXPECT_NEAR(loss_of(equal, {{0, 1}}, neg, 2.5), 2.5, 1e-12);
}

TEST(MarginLoss, EmptyPositivesAndBadGamma) {
  Tape<double> t;
  const Var x = t.constant(Dense(2, 1));
  EXPECT_THROW(margin_loss(t, x, {}, NegativeSet{}, 1.0), ArgumentError);
  EXPECT_THROW(margin_loss(t, x, std::vector<EntityPair>{{0, 1}}, NegativeSet{}, 0.0), ArgumentError);
}

TEST(MineNegatives, ThreeEntityToyMatchesExhaustiveSort) {
  const auto g = make_graph(3, 1, {{0, 0, 1}, {1, 0, 2}}, 3, 1, {{0, 0, 1}, {1, 0, 2}});
  // G1 at 0, 1, 5; G2 at 0.1, 3, 4.
  const Dense x(6, 1, std::vector<double>{0.0, 1.0, 5.0, 0.1, 3.0, 4.0});
  const std::vector<EntityPair> pos{{0, 3}, {2, 5}};
  for (std::size_t k : {1, 2}) {
    const auto got = mine_negatives(x, pos, g, k);
    EXPECT_EQ(got.pairs, oracle::negatives(x, pos, g, k)) << "k=" << k;
    EXPECT_EQ(got.pairs.size(), pos.size() * 2 * k);
  }
  const auto k1 = mine_negatives(x, pos, g, 1);
  EXPECT_EQ(k1.pairs[0], (EntityPair{0, 4}));
  EXPECT_EQ(k1.pairs[1], (EntityPair{1, 3}));
}

TEST(MineNegatives, TrueCounterpartIsSkippedEvenWhenNearest) {
  const auto g = make_graph(2, 1, {{0, 0, 1}}, 3, 1, {{0, 0, 1}, {1, 0, 2}});
  const Dense x(5, 1, std::vector<double>{0.0, 9.0, 0.0, 2.0, 1.0});
  const auto neg = mine_negatives(x, std::vector<EntityPair>{{0, 2}}, g, 1);
  EXPECT_EQ(neg.pairs[0], (EntityPair{0, 4}));
}

TEST(MineNegatives, TiesGoToLowerId) {
  const auto g = make_graph(2, 1, {{0, 0, 1}}, 3, 1, {{0, 0, 1}, {1, 0, 2}});
  const Dense x(5, 1, std::vector<double>{0.0, 9.0, 0.0, 1.0, 1.0});
  const auto neg = mine_negatives(x, std::vector<EntityPair>{{0, 2}}, g, 1);
  EXPECT_EQ(neg.pairs[0], (EntityPair{0, 3}));
}

TEST(MineNegatives, DeterministicAndPoolLimited) {
  Rng rng(3);
  const auto inst = kgalign::testing::random_instance(rng);
  const auto x = random_matrix(inst.graph.num_entities(), 4, rng);
  EXPECT_EQ(mine_negatives(x, inst.pairs, inst.graph, 2).pairs, mine_negatives(x, inst.pairs, inst.graph, 2).pairs);
  const auto pool = std::min(inst.graph.num_entities(GraphLabel::G1), inst.graph.num_entities(GraphLabel::G2));
  EXPECT_THROW(mine_negatives(x, inst.pairs, inst.graph, pool), ArgumentError);
  EXPECT_THROW(mine_negatives(x, inst.pairs, inst.graph, 0), ArgumentError);
}

TEST(Optimizer, ZeroLearningRateIsBitIdentical) {
  Rng rng(4);
  for (auto kind : {OptimizerKind::Adam, OptimizerKind::Sgd}) {
    TrainConfig c;
    c.learning_rate = 0.0;
    c.optimizer = kind;
    Optimizer<double> opt(c);
    auto p = random_matrix(3, 3, rng);
    const auto before = p;
    opt.step({{"p", &p}}, {random_matrix(3, 3, rng)});
    EXPECT_EQ(p, before);
  }
}

TEST(Optimizer, LateTensorGetsItsOwnBiasCorrection) {
  TrainConfig c;
  c.learning_rate = 0.01;
  Optimizer<double> opt(c);
  Dense a(1, 1, 0.0), b(1, 1, 0.0);
  const Dense g(1, 1, 3.0);
  for (int i = 0; i < 5; ++i) opt.step({{"a", &a}}, {g});
  opt.step({{"a", &a}, {"b", &b}}, {g, g});
  // First Adam step moves by lr regardless of gradient scale.
  EXPECT_NEAR(b(0, 0), -0.01, 1e-9);
}

TEST(Train, ZeroNoiseFiftyEntitiesConverges) {
  SmallRun r(50, 0.4);
  r.train.max_epochs = 200;
  r.train.resample_interval = 10;
  const auto res = r.run();
  ASSERT_FALSE(res.log.empty());
  EXPECT_LE(res.log.size(), 200u);
  EXPECT_LT(res.log.back().loss, 1e-3);
  std::optional<double> last_val;
  for (const auto& rec : res.log)
    if (rec.val_hits1) last_val = rec.val_hits1;
  ASSERT_TRUE(last_val.has_value());
  EXPECT_EQ(*last_val, 1.0);
}

TEST(Train, NoJointEpochsLeavesStageOneParams) {
  SmallRun r;
  r.train.max_epochs = 15;
  r.train.pretrain_max_epochs = 15;
  const auto res = r.run();
  EXPECT_EQ(res.switch_epoch, 15u);
  EXPECT_EQ(res.params.layers, res.preliminary.layers);
  EXPECT_TRUE(res.touched_joint.empty());
}

TEST(Train, StageOneNeverTouchesRelationTransform) {
  SmallRun r;
  r.train.pretrain_max_epochs = 10;
  r.train.max_epochs = 20;
  r.train.gamma = 50.0;  // keeps every hinge active so each tensor gets a gradient
  const auto res = r.run();
  EXPECT_FALSE(res.touched_preliminary.contains("WR"));
  auto params = res.params;
  for (const auto& [name, tensor] : params.tensors()) EXPECT_TRUE(res.touched_joint.contains(name)) << name;
  EXPECT_TRUE(res.touched_joint.contains("WR"));
}

TEST(Train, SwitchesAfterPatienceRunsOut) {
  SmallRun r;
  r.train.max_epochs = 100;
  r.train.pretrain_patience = 2;
  const auto res = r.run();
  // Zero noise: validation Hits@1 is perfect at the first check and never improves.
  EXPECT_EQ(res.switch_epoch, 3 * r.train.resample_interval);
  EXPECT_EQ(res.log.size(), 100u);
  EXPECT_EQ(res.log[res.switch_epoch].stage, Stage::Joint);
}

TEST(Train, FrozenNegativesLinearSingleLayerDescends) {
  SmallRun r;
  r.hgcn.num_layers = 1;
  r.hgcn.dims = {8, 8};
  r.hgcn.highway = false;
  r.hgcn.relu_last_layer = false;
  r.train.optimizer = OptimizerKind::Sgd;
  r.train.learning_rate = 1e-4;
  r.train.resample_interval = 1000;
  r.train.max_epochs = 20;
  r.train.pretrain_max_epochs = 20;
  r.train.gamma = 50.0;
  // Noisy features so the loss is not already zero.
  Rng rng(9);
  r.data.features.vectors = random_matrix(r.data.features.vectors.rows(), 8, rng);
  const auto res = r.run();
  ASSERT_EQ(res.log.size(), 20u);
  for (std::size_t i = 1; i < res.log.size(); ++i)
    EXPECT_LE(res.log[i].loss, res.log[i - 1].loss) << "epoch " << res.log[i].epoch;
}

TEST(Train, CheckpointHookFiresAtIntervalsAndTransitions) {
  SmallRun r;
  r.train.max_epochs = 20;
  r.train.pretrain_max_epochs = 10;
  std::vector<std::pair<Stage, std::size_t>> seen;
  TrainHooks<double> hooks;
  hooks.on_checkpoint = [&](const Checkpoint<double>& c) { seen.emplace_back(c.stage, c.epoch); };
  r.run(hooks);
  const std::vector<std::pair<Stage, std::size_t>> expected{{Stage::Preliminary, 5}, {Stage::Preliminary, 10},
                                                            {Stage::Preliminary, 10}, {Stage::Joint, 15},
                                                            {Stage::Joint, 20}, {Stage::Joint, 20}};
  EXPECT_EQ(seen, expected);
}

TEST(Train, DeterministicAcrossRuns) {
  SmallRun r;
  EXPECT_EQ(r.run().params, r.run().params);
}

TEST(Train, NonFiniteLossAborts) {
  SmallRun r;
  const auto seed_row = r.data.seeds.train.front().source;
  r.data.features.vectors(seed_row, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(r.run(), NumericalError);
}

TEST(Train, RejectsEmptySeedsAndBadShapes) {
  SmallRun r;
  auto seeds = r.data.seeds;
  seeds.train.clear();
  EXPECT_THROW(kgalign::train(r.data.data.graph, r.adj, r.data.features.vectors, seeds, r.hgcn, r.train),
               ArgumentError);
  EXPECT_THROW(kgalign::train(r.data.data.graph, r.adj, Dense(3, 8), r.data.seeds, r.hgcn, r.train), ShapeError);
}
