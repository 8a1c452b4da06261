#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hct/baselines.hpp"
#include "hct/dense_trellis.hpp"
#include "hct/oracle.hpp"
#include "hct/sparse_trellis.hpp"
#include "test_support.hpp"

namespace hct {
namespace {

const LeafOrdering kShuffled{OrderingMode::kRandom, 17};

std::vector<Hierarchy> random_trees(int n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Hierarchy> out;
  for (int i = 0; i < count; ++i) out.push_back(testing::random_hierarchy(n, rng));
  return out;
}

DasguptaModel shuffled_dasgupta(int n, std::uint64_t seed, const LeafOrdering& ordering) {
  const PairwiseWeights w = testing::random_weights(n, seed, 0.0, 1.0);
  return DasguptaModel(testing::permute_weights(w, ordering.for_dataset(n, {})));
}

TEST(SparseTrellis, SingleTreeRealizesOneHierarchy) {
  const auto trees = random_trees(4, 1, 1);
  const SparseTrellis st = SparseTrellis::build_from_trees(trees, kShuffled);
  EXPECT_EQ(st.count_hierarchies(), 1);
  EXPECT_EQ(st.sparsity_index(), BigRational(1, 15));
  EXPECT_EQ(st.vertex_count(), 7u);
  EXPECT_TRUE(st.realizes(relabel(trees[0], kShuffled.for_dataset(4, {}))));

  const SparseTrellis nine = SparseTrellis::build_from_trees(random_trees(9, 1, 2), LeafOrdering{});
  EXPECT_EQ(nine.sparsity_index(), BigRational(1, 2027025));
}

TEST(SparseTrellis, SaturationEqualsDenseTrellis) {
  const auto all = oracle::enumerate_hierarchies(GroundSet(4));
  ASSERT_EQ(all.size(), 15u);
  const SparseTrellis st = SparseTrellis::build_from_trees(all, kShuffled);
  EXPECT_EQ(st.count_hierarchies(), 15);
  EXPECT_EQ(st.sparsity_index(), BigRational(1));
  EXPECT_EQ(st.vertex_count(), 15u);

  const DasguptaModel m = testing::random_dasgupta(4, 8);
  SparseEvaluator<DasguptaModel> sparse(st, m);
  DenseTrellis<DasguptaModel> dense(m);
  EXPECT_NEAR(sparse.log_partition(), dense.compute_partition_function(), 1e-12);
  EXPECT_EQ(sparse.map().tree, dense.compute_map().tree);
  EXPECT_NEAR(sparse.map().log_value, dense.compute_map().log_value, 1e-12);
}

TEST(SparseTrellis, SingleTreeValuesEqualItsPotential) {
  const auto trees = random_trees(6, 1, 5);
  const SparseTrellis st = SparseTrellis::build_from_trees(trees, kShuffled);
  const CorrelationModel m = testing::random_correlation(6, 6);
  SparseEvaluator<CorrelationModel> e(st, m);
  const Hierarchy placed = relabel(trees[0], kShuffled.for_dataset(6, {}));
  const LogWeight phi = log_hierarchy_potential(placed, m);
  EXPECT_NEAR(e.log_partition(), phi, 1e-12);
  EXPECT_NEAR(e.map().log_value, phi, 1e-12);
  EXPECT_EQ(e.map().tree, placed);
}

TEST(SparseTrellis, DisjointTreesRealizeAtLeastTwo) {
  // ((0,1),(2,3)) and ((0,2),(1,3)) share no internal cluster below the root.
  const auto s = [](int i) { return Cluster::singleton(i); };
  const Hierarchy a = Hierarchy::from_splits(
      4, {make_split(s(0) | s(1), s(2) | s(3)), make_split(s(0), s(1)), make_split(s(2), s(3))});
  const Hierarchy b = Hierarchy::from_splits(
      4, {make_split(s(0) | s(2), s(1) | s(3)), make_split(s(0), s(2)), make_split(s(1), s(3))});
  const std::vector<Hierarchy> trees{a, b};
  const SparseTrellis st = SparseTrellis::build_from_trees(trees, kShuffled);
  EXPECT_EQ(st.count_hierarchies(), 2);
}

// The counting recurrence must agree with a direct scan of every hierarchy.
TEST(SparseTrellis, CountMatchesExhaustiveRealizabilityScan) {
  for (int n = 3; n <= 7; ++n) {
    const auto all = oracle::enumerate_hierarchies(GroundSet(n));
    for (int k : {1, 2, 3, 6, 12}) {
      const auto trees = random_trees(n, k, 1000 * n + k);
      const SparseTrellis st = SparseTrellis::build_from_trees(trees, kShuffled);
      std::size_t realized = 0;
      for (const Hierarchy& h : all) realized += st.realizes(h) ? 1 : 0;
      EXPECT_EQ(st.count_hierarchies(), realized) << "n=" << n << " k=" << k;
    }
  }
}

TEST(SparseTrellis, CountGrowsWithSeedTrees) {
  const auto trees = random_trees(8, 40, 3);
  BigUint prev = 0;
  for (std::size_t k = 1; k <= trees.size(); ++k) {
    const SparseTrellis st =
        SparseTrellis::build_from_trees(std::span(trees).first(k), kShuffled);
    EXPECT_GE(st.count_hierarchies(), prev);
    prev = st.count_hierarchies();
  }
  EXPECT_GT(prev, 1);
}

TEST(SparseTrellis, MapIsSandwiched) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto trees = random_trees(7, 5, 50 + seed);
    const SparseTrellis st = SparseTrellis::build_from_trees(trees, kShuffled);
    const DasguptaModel m = testing::random_dasgupta(7, 60 + seed);
    SparseEvaluator<DasguptaModel> e(st, m);
    LogWeight best_seed = kLogZero;
    for (const Hierarchy& t : trees) {
      best_seed =
          std::max(best_seed, log_hierarchy_potential(relabel(t, kShuffled.for_dataset(7, {})), m));
    }
    DenseTrellis<DasguptaModel> dense(m);
    const LogWeight sparse_map = e.map().log_value;
    EXPECT_GE(sparse_map, best_seed - 1e-12);
    EXPECT_LE(sparse_map, dense.compute_map().log_value + 1e-12);
    EXPECT_TRUE(st.realizes(e.map().tree));
  }
}

TEST(SparseTrellis, PartitionFunctionMatchesRestrictedOracle) {
  const auto trees = random_trees(6, 8, 77);
  const SparseTrellis st = SparseTrellis::build_from_trees(trees, kShuffled);
  const CorrelationModel m = testing::random_correlation(6, 78);
  std::vector<LogWeight> phis;
  oracle::for_each_hierarchy(6, m, [&](const std::vector<Split>& splits, LogWeight lp) {
    if (st.realizes(Hierarchy::from_splits(6, splits))) phis.push_back(lp);
  });
  SparseEvaluator<CorrelationModel> e(st, m);
  EXPECT_NEAR(e.log_partition(), log_sum_exp(phis), 1e-9);
}

TEST(SparseTrellis, SamplerStaysInsideAndMatchesRestrictedPosterior) {
  const auto trees = random_trees(5, 6, 90);
  const SparseTrellis st = SparseTrellis::build_from_trees(trees, kShuffled);
  const CorrelationModel m = testing::random_correlation(5, 91);
  SparseEvaluator<CorrelationModel> e(st, m);
  std::map<std::string, double> exact;
  oracle::for_each_hierarchy(5, m, [&](const std::vector<Split>& splits, LogWeight lp) {
    const Hierarchy h = Hierarchy::from_splits(5, splits);
    if (st.realizes(h)) exact[h.signature()] = std::exp(lp - e.log_partition());
  });
  std::map<std::string, double> freq;
  auto sampler = e.sampler(5);
  const int draws = 40000;
  for (int i = 0; i < draws; ++i) {
    const Hierarchy h = sampler.next();
    ASSERT_TRUE(exact.contains(h.signature()));
    freq[h.signature()] += 1.0 / draws;
  }
  std::vector<double> p;
  std::vector<double> q;
  for (const auto& [sig, prob] : exact) {
    p.push_back(freq[sig]);
    q.push_back(prob);
  }
  EXPECT_LE(testing::total_variation(p, q), 0.02);
}

TEST(SparseTrellis, FromVerticesPrunesDeadEnds) {
  const auto trees = random_trees(5, 1, 4);
  SparseTrellis::VertexMap v = SparseTrellis::build_from_trees(trees, kShuffled).vertices();
  // A pair that references a vertex with no children cannot be realized.
  const Cluster root = Cluster::full(5);
  const Cluster a(0b00111);
  const Cluster b(0b11000);
  if (!v.contains(a)) v[root].emplace_back(a, b);
  const SparseTrellis st = SparseTrellis::from_vertices(5, kShuffled, v);
  EXPECT_EQ(st.count_hierarchies(), 1);
  EXPECT_FALSE(st.vertices().contains(a) && st.child_pairs(a).empty());
  EXPECT_EQ(st.vertex_count(), 9u);
}

TEST(SparseTrellis, RejectsMixedLeafCounts) {
  std::vector<Hierarchy> trees = random_trees(4, 1, 1);
  trees.push_back(random_trees(5, 1, 1).front());
  EXPECT_THROW(SparseTrellis::build_from_trees(trees, kShuffled), std::domain_error);
  EXPECT_THROW(SparseTrellis::build_from_trees(std::vector<Hierarchy>{}, kShuffled),
               std::domain_error);
}

TEST(LeafOrdering, StandardRelabelsInDepthFirstOrder) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const Hierarchy h = testing::random_hierarchy(8, rng);
    const Hierarchy placed = relabel(h, LeafOrdering{}.for_tree(h, {}));
    // Every cluster of the relabeled tree is a contiguous leaf range.
    for (const Cluster c : placed.nodes()) {
      const std::uint64_t shifted = c.bits() >> c.lowest_leaf();
      EXPECT_EQ(shifted & (shifted + 1), 0u) << c.to_string();
    }
  }
}

TEST(LeafOrdering, NormAscendingSortsByMomentum) {
  const std::vector<FourVector> leaves{
      {5.0, 0.0, 0.0, 3.0}, {2.0, 1.0, 0.0, 0.0}, {9.0, 0.0, 4.0, 4.0}, {3.0, 0.0, 0.0, 2.0}};
  const LeafOrdering o{OrderingMode::kNormAscending, 0};
  const auto arranged = o.arrange_dataset(leaves);
  for (std::size_t i = 1; i < arranged.size(); ++i) {
    EXPECT_LE(arranged[i - 1].momentum_norm(), arranged[i].momentum_norm());
  }
  EXPECT_THROW(o.for_dataset(4, {}), std::invalid_argument);
  EXPECT_EQ(parse_ordering_mode("norm_ascending"), OrderingMode::kNormAscending);
}

TEST(BeamSearchTrellis, WidthOneIsGreedyTree) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DasguptaModel m = testing::random_dasgupta(7, 400 + seed);
    const std::vector<DasguptaModel> data{m};
    const SparseTrellis bs =
        build_beam_search_trellis<DasguptaModel>(data, BeamConfig{1, 0, 1e-12}, kShuffled);
    const std::vector<Hierarchy> greedy{greedy_cluster(m).tree};
    const SparseTrellis g = SparseTrellis::build_from_trees(greedy, kShuffled);
    EXPECT_EQ(bs.count_hierarchies(), 1);
    EXPECT_EQ(bs.vertices(), g.vertices());
  }
}

TEST(BeamSearchTrellis, MapBoundedByFullTrellis) {
  const LeafOrdering order{OrderingMode::kNormAscending, 0};
  std::vector<std::vector<FourVector>> train;
  for (std::uint64_t s = 0; s < 5; ++s) train.push_back(testing::random_jet(6, 800 + s).leaves);
  const SparseTrellis st = build_beam_search_trellis(train, 1.5, BeamConfig{}, order);
  EXPECT_GE(st.count_hierarchies(), 1);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto jet = testing::random_jet(6, 900 + s);
    const GinkgoModel m(order.arrange_dataset(jet.leaves), jet.lambda);
    SparseEvaluator<GinkgoModel> e(st, m);
    DenseTrellis<GinkgoModel> dense(m);
    EXPECT_LE(e.map().log_value, dense.compute_map().log_value + 1e-12);
  }
}

TEST(SimulatorTrellis, SeedsAreRealizedAndCountIsMonotone) {
  ginkgo::JetConfig cfg;
  cfg.seed = 31;
  const LeafOrdering order{OrderingMode::kNormAscending, 0};
  BigUint prev = 0;
  for (int k : {1, 5, 20}) {
    const SparseTrellis st = build_simulator_trellis(cfg, 7, k, order);
    EXPECT_GE(st.count_hierarchies(), prev);
    prev = st.count_hierarchies();
  }
  const SparseTrellis one = build_simulator_trellis(cfg, 7, 1, order);
  EXPECT_EQ(one.count_hierarchies(), 1);
}

}  // namespace
}  // namespace hct
