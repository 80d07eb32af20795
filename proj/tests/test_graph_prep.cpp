#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace kgalign;
using kgalign::testing::make_graph;

TEST(Adjacency, NoTriplesGivesIdentity) {
  const auto g = make_graph(3, 0, {}, 2, 0, {});
  EXPECT_EQ(build_adjacency<double>(g).matrix.to_dense(), DenseMatrix<double>::identity(5));
}

TEST(Adjacency, TwoConnectedNodesAreAllHalf) {
  const auto a = build_adjacency<double>(make_graph(2, 1, {{0, 0, 1}}, 0, 0, {})).matrix.to_dense();
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(a(i, j), 0.5, 1e-15);
}

TEST(Adjacency, ThreeNodePath) {
  const auto a = build_adjacency<double>(make_graph(3, 1, {{0, 0, 1}, {1, 0, 2}}, 0, 0, {})).matrix.to_dense();
  const double s6 = 1.0 / std::sqrt(6.0);
  const double expected[3][3] = {{0.5, s6, 0.0}, {s6, 1.0 / 3.0, s6}, {0.0, s6, 0.5}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a(i, j), expected[i][j], 1e-12) << i << "," << j;
}

TEST(Adjacency, ParallelAndReverseTriplesMakeOneEdge) {
  const auto once = build_adjacency<double>(make_graph(2, 1, {{0, 0, 1}}, 0, 0, {})).matrix.to_dense();
  const auto many =
      build_adjacency<double>(make_graph(2, 3, {{0, 0, 1}, {0, 1, 1}, {1, 2, 0}}, 0, 0, {})).matrix.to_dense();
  EXPECT_EQ(once, many);
}

TEST(Adjacency, WeightedCountsParallelTriples) {
  const auto g = make_graph(2, 2, {{0, 0, 1}, {1, 1, 0}}, 0, 0, {});
  const auto adj = build_adjacency<double>(g, AdjacencyOptions{true});
  // Degree 1 + 2 on both ends.
  EXPECT_NEAR(adj.matrix.at(0, 1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(adj.matrix.at(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_TRUE(adj.weighted);
}

TEST(Adjacency, SelfLoopTriplesFoldIntoIdentity) {
  const auto with = build_adjacency<double>(make_graph(2, 2, {{0, 0, 1}, {0, 1, 0}}, 0, 0, {})).matrix.to_dense();
  const auto without = build_adjacency<double>(make_graph(2, 2, {{0, 0, 1}, {1, 1, 1}}, 0, 0, {})).matrix.to_dense();
  EXPECT_EQ(with, without);
}

TEST(Adjacency, MatchesDenseOracleAndIsSymmetric) {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = kgalign::testing::random_instance(rng);
    const auto a = build_adjacency<double>(inst.graph).matrix.to_dense();
    EXPECT_LE(oracle::max_abs_diff(a, oracle::adjacency(inst.graph)), 1e-12);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) EXPECT_EQ(a(i, j), a(j, i));
  }
}

TEST(Adjacency, CrossGraphEntriesAreZero) {
  const auto g = kgalign::testing::six_node_graph();
  const auto a = build_adjacency<double>(g).matrix.to_dense();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 3; j < 6; ++j) EXPECT_EQ(a(i, j), 0.0);
}

TEST(Adjacency, CoordinateDump) {
  std::ostringstream out;
  write_coordinate(out, build_adjacency<double>(make_graph(2, 1, {{0, 0, 1}}, 0, 0, {})).matrix);
  std::istringstream in(out.str());
  std::size_t row = 0, col = 0, lines = 0;
  double value = 0.0;
  while (in >> row >> col >> value) {
    EXPECT_EQ(row, lines / 2);
    EXPECT_EQ(col, lines % 2);
    EXPECT_NEAR(value, 0.5, 1e-15);
    ++lines;
  }
  EXPECT_EQ(lines, 4u);
}
