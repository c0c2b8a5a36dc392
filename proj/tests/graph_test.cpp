// Copyright 2026 The rewardprop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rewardprop/graph.hpp"

#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace rewardprop {
namespace {

using testing::RandomParams;
using testing::RandomRecords;
using testing::RandomSchema;

void ExpectRowStochastic(const Matrix& w) {
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double s = 0.0;
    EXPECT_EQ(w(i, i), 0.0);
    for (std::size_t j = 0; j < w.cols(); ++j) {
      EXPECT_GE(w(i, j), 0.0);
      EXPECT_LE(w(i, j), 1.0);
      s += w(i, j);
    }
    EXPECT_NEAR(s, 1.0, 1e-12) << "row " << i;
  }
}

TEST(ShapingValueTest, Examples) {
  EXPECT_EQ(ShapingValue({{1.0, 1.0}}, std::vector<double>{3.0, 4.0}), 25.0);
  EXPECT_EQ(ShapingValue({{0.3, 7.0}}, std::vector<double>{0.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(ShapingValue({{2.0, 0.5, 1.0}}, std::vector<double>{1.0, 2.0, 3.0}), 14.0);
  EXPECT_THROW(ShapingValue({{1.0}}, std::vector<double>{1.0, 2.0}), Error);
}

TEST(GraphTest, TwoNodesAreMutualNeighbours) {
  std::mt19937_64 rng(1);
  const auto schema = RandomSchema(rng);
  const auto recs = RandomRecords(rng, schema, 2, 1);
  const Slice slice(schema, recs);
  const auto g = BuildWeightMatrix(slice, RandomParams(rng, schema.num_factors()), {});
  EXPECT_EQ(g.weights(), Matrix({{0.0, 1.0}, {1.0, 0.0}}));
}

TEST(GraphTest, IdenticalRecordsShareWeightEqually) {
  const FactorSchema schema({{"s", 2}}, {{"a", 1}});
  std::vector<StateActionRecord> recs(3, StateActionRecord{{0.5, -1.0}, {2.0}, 1.0});
  const Slice slice(schema, recs);
  const auto g = BuildWeightMatrix(slice, ShapingParams::Uniform(2), {});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(g.weights()(i, j), i == j ? 0.0 : 0.5);
  }
}

TEST(GraphTest, MatchesDoubleLoopOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto schema = RandomSchema(rng);
    const auto recs = RandomRecords(rng, schema, 5, 2, 0.5);
    const auto params = RandomParams(rng, schema.num_factors());
    const Slice slice(schema, recs);
    const auto w = BuildWeightMatrix(slice, params, {}).weights();
    const auto oracle = testing::OracleWeights(recs, schema, params);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(w(i, j), oracle(i, j), 1e-12);
    }
  }
}

TEST(GraphTest, RowStochasticEvenWhenEveryExponentUnderflows) {
  std::mt19937_64 rng(3);
  const auto schema = RandomSchema(rng);
  // Distances near 1e3 make exp(-f) underflow to zero without stabilization.
  const auto recs = RandomRecords(rng, schema, 12, 4, 1e3);
  const Slice slice(schema, recs);
  const auto w = BuildWeightMatrix(slice, ShapingParams::Uniform(schema.num_factors()), {}).weights();
  ExpectRowStochastic(w);
}

TEST(GraphTest, RandomGraphsAreRowStochastic) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto schema = RandomSchema(rng);
    const auto recs = RandomRecords(rng, schema, 2 + rng() % 20, 1, 1.0 + trial);
    const Slice slice(schema, recs);
    ExpectRowStochastic(
        BuildWeightMatrix(slice, RandomParams(rng, schema.num_factors(), 0.0, 3.0), {}).weights());
  }
}

TEST(GraphTest, NearDuplicateAndOutlierRecords) {
  const FactorSchema schema({{"s", 1}}, {{"a", 1}});
  std::vector<StateActionRecord> recs{{{0.0}, {0.0}, 1.0},
                                      {{1e-12}, {0.0}, {}},
                                      {{0.5}, {0.5}, 2.0},
                                      {{1e6}, {1e6}, {}}};
  const Slice slice(schema, recs);
  const auto w = BuildWeightMatrix(slice, ShapingParams::Uniform(2), {}).weights();
  ExpectRowStochastic(w);
  // The outlier's row still sums to one; its weight concentrates on the
  // nearest record.
  EXPECT_NEAR(w(3, 2), 1.0, 1e-12);
  EXPECT_GT(w(0, 1), w(0, 2));
}

TEST(GraphTest, ShiftingTheStabilizerLeavesWeightsUnchanged) {
  std::mt19937_64 rng(5);
  const auto schema = RandomSchema(rng);
  const auto recs = RandomRecords(rng, schema, 8, 3, 0.7);
  const Slice slice(schema, recs);
  const auto params = RandomParams(rng, schema.num_factors());
  const auto base = BuildWeightMatrix(slice, params, {}).weights();
  for (double c : {-3.0, -0.5, 0.25, 2.0, 10.0}) {
    GraphOptions opts;
    opts.extra_shift = c;
    const auto shifted = BuildWeightMatrix(slice, params, {}, opts).weights();
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(shifted(i, j), base(i, j), 1e-13);
    }
  }
}

TEST(GraphTest, CheaperNeighbourGetsMoreWeight) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto schema = RandomSchema(rng);
    const auto recs = RandomRecords(rng, schema, 10, 3, 0.5);
    const Slice slice(schema, recs);
    const auto params = RandomParams(rng, schema.num_factors());
    const auto cost = ShapingCosts(slice, params, {});
    const auto w = BuildWeightMatrix(slice, params, {}).weights();
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = 0; j < 10; ++j) {
        for (std::size_t k = 0; k < 10; ++k) {
          if (i == j || i == k) continue;
          if (cost(i, j) < cost(i, k)) { EXPECT_GT(w(i, j), w(i, k)); }
        }
      }
    }
  }
}

TEST(GraphTest, BlocksRestitchToUnlabeledRows) {
  std::mt19937_64 rng(7);
  const auto schema = RandomSchema(rng);
  const auto recs = RandomRecords(rng, schema, 11, 4);
  const Slice slice(schema, recs);
  const auto g = BuildWeightMatrix(slice, RandomParams(rng, schema.num_factors()), {});
  const auto uu = g.UU();
  const auto ul = g.UL();
  const auto ll = g.LL();
  const auto lu = g.LU();
  ASSERT_EQ(uu.rows(), 7u);
  ASSERT_EQ(ul.cols(), 4u);
  for (std::size_t u = 0; u < g.unlabeled().size(); ++u) {
    for (std::size_t l = 0; l < g.labeled().size(); ++l) {
      EXPECT_EQ(ul(u, l), g.weights()(g.unlabeled()[u], g.labeled()[l]));
    }
    for (std::size_t v = 0; v < g.unlabeled().size(); ++v) {
      EXPECT_EQ(uu(u, v), g.weights()(g.unlabeled()[u], g.unlabeled()[v]));
    }
  }
  for (std::size_t l = 0; l < g.labeled().size(); ++l) {
    for (std::size_t k = 0; k < g.labeled().size(); ++k) {
      EXPECT_EQ(ll(l, k), g.weights()(g.labeled()[l], g.labeled()[k]));
    }
    for (std::size_t u = 0; u < g.unlabeled().size(); ++u) {
      EXPECT_EQ(lu(l, u), g.weights()(g.labeled()[l], g.unlabeled()[u]));
    }
  }
  auto order = g.node_order();
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(order[i], i);
}

TEST(GraphTest, TopKKeepsKLargestPerRow) {
  std::mt19937_64 rng(8);
  const auto schema = RandomSchema(rng);
  const auto recs = RandomRecords(rng, schema, 9, 3);
  const Slice slice(schema, recs);
  const auto params = RandomParams(rng, schema.num_factors());
  const auto dense = BuildWeightMatrix(slice, params, {}).weights();
  GraphOptions opts;
  opts.top_k = 3;
  const auto sparse = BuildWeightMatrix(slice, params, {}, opts).weights();
  ExpectRowStochastic(sparse);
  for (std::size_t i = 0; i < 9; ++i) {
    std::size_t nonzero = 0;
    double kept = 0.0;
    for (std::size_t j = 0; j < 9; ++j) {
      if (sparse(i, j) > 0.0) {
        ++nonzero;
        kept += dense(i, j);
      }
    }
    EXPECT_EQ(nonzero, 3u);
    for (std::size_t j = 0; j < 9; ++j) {
      if (sparse(i, j) > 0.0) { EXPECT_NEAR(sparse(i, j), dense(i, j) / kept, 1e-12); }
    }
  }
}

TEST(GraphTest, TopKBreaksTiesByIndex) {
  const FactorSchema schema({{"s", 1}}, {{"a", 1}});
  std::vector<StateActionRecord> recs(5, StateActionRecord{{0.0}, {0.0}, 1.0});
  const Slice slice(schema, recs);
  GraphOptions opts;
  opts.top_k = 2;
  const auto w = BuildWeightMatrix(slice, ShapingParams::Uniform(2), {}, opts).weights();
  EXPECT_EQ(w(0, 1), 0.5);
  EXPECT_EQ(w(0, 2), 0.5);
  EXPECT_EQ(w(0, 3), 0.0);
  EXPECT_EQ(w(4, 0), 0.5);
  EXPECT_EQ(w(4, 1), 0.5);
}

TEST(GraphTest, ParallelRowsMatchSerial) {
  std::mt19937_64 rng(9);
  const auto schema = RandomSchema(rng);
  const auto recs = RandomRecords(rng, schema, 40, 10);
  const Slice slice(schema, recs);
  const auto params = RandomParams(rng, schema.num_factors());
  GraphOptions par;
  par.jobs = 4;
  EXPECT_EQ(BuildWeightMatrix(slice, params, {}).weights(),
            BuildWeightMatrix(slice, params, {}, par).weights());
}

TEST(GraphTest, Errors) {
  const FactorSchema schema({{"s", 1}}, {{"a", 1}});
  std::vector<StateActionRecord> one{{{0.0}, {0.0}, 1.0}};
  try {
    BuildWeightMatrix(Slice(schema, one), ShapingParams::Uniform(2), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateSlice);
  }
  std::vector<StateActionRecord> two(2, one[0]);
  try {
    BuildWeightMatrix(Slice(schema, two), ShapingParams::Uniform(3), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
  try {
    BuildWeightMatrix(Slice(schema, two), {{1.0, std::nan("")}}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteValue);
  }
}

TEST(GraphTest, DenseDumpRoundTrip) {
  testing::TempDir dir;
  std::mt19937_64 rng(10);
  const auto schema = RandomSchema(rng);
  const auto recs = RandomRecords(rng, schema, 6, 2);
  const Slice slice(schema, recs);
  const auto w = BuildWeightMatrix(slice, RandomParams(rng, schema.num_factors()), {}).weights();
  WriteDenseMatrix(w, dir / "w.bin");
  EXPECT_EQ(std::filesystem::file_size(dir / "w.bin"), 4u + 1u + 16u + 8u * 36u);
  EXPECT_EQ(ReadDenseMatrix(dir / "w.bin"), w);
}

}  // namespace
}  // namespace rewardprop
