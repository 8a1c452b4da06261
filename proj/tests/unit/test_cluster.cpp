#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "hct/cluster.hpp"
#include "hct/hierarchy.hpp"
#include "hct/log_math.hpp"
#include "test_support.hpp"

namespace hct {
namespace {

// a=0, b=1, c=2, d=3
Cluster set_of(std::initializer_list<int> leaves) { return cluster_of(std::vector<int>(leaves)); }

TEST(Complement, Examples) {
  EXPECT_EQ(complement(set_of({0, 1, 2}), set_of({0})), set_of({1, 2}));
  EXPECT_EQ(complement(set_of({0, 1}), set_of({0})), set_of({1}));
  EXPECT_EQ(complement(set_of({0, 1, 2, 3}), set_of({0, 2})), set_of({1, 3}));
}

TEST(Complement, RejectsNonStrictSubsets) {
  EXPECT_THROW(complement(set_of({0, 1}), set_of({0, 1})), std::domain_error);
  EXPECT_THROW(complement(set_of({0, 1}), Cluster()), std::domain_error);
  EXPECT_THROW(complement(set_of({0, 1}), set_of({2})), std::domain_error);
}

TEST(PivotSplits, Counts) {
  EXPECT_EQ(proper_splits_containing_pivot(Cluster::full(4)).size(), 7u);
  EXPECT_EQ(proper_splits_containing_pivot(set_of({3, 5})).size(), 1u);
  for (int n = 2; n <= 16; ++n) {
    EXPECT_EQ(proper_splits_containing_pivot(Cluster::full(n)).size(), (1u << (n - 1)) - 1);
  }
  EXPECT_THROW(proper_splits_containing_pivot(set_of({4})), std::domain_error);
}

TEST(PivotSplits, CoverEveryBipartitionOnce) {
  // Brute force: all unordered bipartitions of sparse parents up to 6 leaves.
  std::mt19937_64 rng(11);
  for (int k = 2; k <= 6; ++k) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<int> idx(20);
      for (int i = 0; i < 20; ++i) idx[i] = i;
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(k);
      const Cluster parent = cluster_of(idx);

      std::set<std::pair<std::uint64_t, std::uint64_t>> expected;
      for (std::uint64_t sub = 1; sub < (1u << k) - 1; ++sub) {
        std::uint64_t a = 0;
        for (int j = 0; j < k; ++j) {
          if ((sub >> j) & 1) a |= std::uint64_t{1} << idx[j];
        }
        const std::uint64_t b = parent.bits() & ~a;
        expected.insert({std::min(a, b), std::max(a, b)});
      }
      std::multiset<std::pair<std::uint64_t, std::uint64_t>> got;
      for (Cluster s : proper_splits_containing_pivot(parent)) {
        EXPECT_TRUE(s.contains(parent.lowest_leaf()));
        const Cluster r = complement(parent, s);
        got.insert({std::min(s.bits(), r.bits()), std::max(s.bits(), r.bits())});
      }
      EXPECT_EQ(got.size(), expected.size());
      EXPECT_EQ(std::set(got.begin(), got.end()), expected);
    }
  }
}

TEST(LogSumExp, Examples) {
  const std::vector<LogWeight> one{0.0};
  EXPECT_DOUBLE_EQ(log_sum_exp(one), 0.0);
  const std::vector<LogWeight> absorb{kLogZero, 1.25};
  EXPECT_DOUBLE_EQ(log_sum_exp(absorb), 1.25);
  const std::vector<LogWeight> small{std::log(2.0), std::log(3.0)};
  EXPECT_NEAR(log_sum_exp(small), std::log(5.0), 1e-15);
  EXPECT_EQ(log_sum_exp(std::vector<LogWeight>{}), kLogZero);
  EXPECT_EQ(log_sum_exp(std::vector<LogWeight>{kLogZero, kLogZero}), kLogZero);
}

TEST(LogSumExp, StableForLargeMagnitudes) {
  const std::vector<LogWeight> big{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(big), 1000.0 + std::numbers::ln2, 1e-12);
  const std::vector<LogWeight> tiny{-1000.0, -1000.0};
  EXPECT_NEAR(log_sum_exp(tiny), -1000.0 + std::numbers::ln2, 1e-12);
}

TEST(LogSumExp, PermutationInvariantAndMonotone) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LogWeight> v(1 + rng() % 12);
    for (auto& x : v) x = testing::uniform(rng, -30.0, 30.0);
    if (v.size() > 1 && rng() % 3 == 0) v[0] = kLogZero;
    const LogWeight base = log_sum_exp(v);
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_NEAR(log_sum_exp(v), base, 1e-12);

    LogSumAccumulator acc;
    for (LogWeight x : v) acc.add(x);
    EXPECT_NEAR(acc.value(), base, 1e-12);

    const std::size_t i = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    v[i] += 0.5;
    EXPECT_GT(log_sum_exp(v), base);
  }
}

TEST(Hierarchy, FromNodesDerivesStructure) {
  // {{a,b,c,d}, {a,b}, {c,d}, singletons}
  std::vector<Cluster> nodes{set_of({0, 1, 2, 3}), set_of({0, 1}), set_of({2, 3})};
  for (int i = 0; i < 4; ++i) nodes.push_back(Cluster::singleton(i));
  const Hierarchy h = Hierarchy::from_nodes(4, nodes);
  EXPECT_EQ(h.splits().size(), 3u);
  EXPECT_EQ(h.nodes().size(), 7u);
  EXPECT_TRUE(h.spans_ground_set());
  const Split root = *h.split_of(Cluster::full(4));
  EXPECT_EQ(root.left, set_of({0, 1}));
  EXPECT_EQ(root.right, set_of({2, 3}));
}

TEST(Hierarchy, CanonicalChildOrder) {
  const Hierarchy a = Hierarchy::from_splits(
      3, {Split{set_of({0, 1, 2}), set_of({1, 2}), set_of({0})},
          Split{set_of({1, 2}), set_of({2}), set_of({1})}});
  const Hierarchy b = Hierarchy::from_splits(
      3, {Split{set_of({0, 1, 2}), set_of({0}), set_of({1, 2})},
          Split{set_of({1, 2}), set_of({1}), set_of({2})}});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.signature(), b.signature());
  EXPECT_EQ(a.split_of(Cluster::full(3))->left, set_of({0}));
}

TEST(Hierarchy, RejectsInvalidNodeSets) {
  const auto s = [](int i) { return Cluster::singleton(i); };
  // Overlapping, not nested.
  EXPECT_THROW(Hierarchy::from_nodes(3, {set_of({0, 1, 2}), set_of({0, 1}), set_of({1, 2}), s(0),
                                         s(1), s(2)}),
               std::domain_error);
  // Missing singleton.
  EXPECT_THROW(Hierarchy::from_nodes(3, {set_of({0, 1, 2}), set_of({0, 1}), s(0), s(1)}),
               std::domain_error);
  // Ternary node.
  EXPECT_THROW(Hierarchy::from_nodes(3, {set_of({0, 1, 2}), s(0), s(1), s(2)}), std::domain_error);
  // Leaf outside the ground set.
  EXPECT_THROW(Hierarchy::from_nodes(2, {set_of({0, 2}), s(0), s(2)}), std::domain_error);
}

// Mutating any single node of a valid hierarchy must break validity.
TEST(Hierarchy, MutatedHierarchiesAreRejected) {
  std::mt19937_64 rng(99);
  int rejected = 0;
  int trials = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 6);
    const Hierarchy h = testing::random_hierarchy(n, rng);
    std::vector<Cluster> nodes = h.nodes();
    const std::size_t k = rng() % nodes.size();
    const int mode = static_cast<int>(rng() % 3);
    if (mode == 0) {
      nodes.erase(nodes.begin() + static_cast<long>(k));  // drop a node
    } else if (mode == 1) {
      // Toggle one leaf in a node, keeping it nonempty and distinct.
      const int leaf = static_cast<int>(rng() % n);
      const Cluster m(nodes[k].bits() ^ (std::uint64_t{1} << leaf));
      if (m.empty() || std::find(nodes.begin(), nodes.end(), m) != nodes.end()) continue;
      nodes[k] = m;
    } else {
      // Add a cluster that is not already present.
      const Cluster extra(1 + rng() % ((std::uint64_t{1} << n) - 1));
      if (std::find(nodes.begin(), nodes.end(), extra) != nodes.end()) continue;
      nodes.push_back(extra);
    }
    ++trials;
    try {
      const Hierarchy bad = Hierarchy::from_nodes(n, nodes);
      // A mutation can only survive if it produced a different valid tree
      // over a different ground set; that cannot happen with n fixed.
      ADD_FAILURE() << "accepted mutated hierarchy " << bad.signature();
    } catch (const std::domain_error&) {
      ++rejected;
    }
  }
  EXPECT_EQ(rejected, trials);
  EXPECT_GT(trials, 200);
}

TEST(Hierarchy, NodeCountAndSubtrees) {
  std::mt19937_64 rng(3);
  for (int n = 1; n <= 12; ++n) {
    const Hierarchy h = testing::random_hierarchy(n, rng);
    EXPECT_EQ(h.nodes().size(), static_cast<std::size_t>(2 * n - 1));
    for (const Split& s : h.splits()) {
      EXPECT_EQ((s.left | s.right), s.parent);
      EXPECT_TRUE(s.left.disjoint(s.right));
      EXPECT_TRUE(s.left.contains(s.parent.lowest_leaf()));
    }
    EXPECT_TRUE(h.contains_subtree(h));
  }
}

TEST(Hierarchy, RelabelRoundTrip) {
  std::mt19937_64 rng(8);
  const Hierarchy h = testing::random_hierarchy(7, rng);
  std::vector<int> perm{3, 0, 6, 1, 5, 2, 4};
  std::vector<int> inv(7);
  for (int i = 0; i < 7; ++i) inv[perm[i]] = i;
  EXPECT_EQ(relabel(relabel(h, perm), inv), h);
}

}  // namespace
}  // namespace hct
