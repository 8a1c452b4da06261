#include <cmath>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "hct/oracle.hpp"
#include "test_support.hpp"

namespace hct {
namespace {

TEST(Oracle, EnumerationCounts) {
  EXPECT_EQ(oracle::enumerate_hierarchies(GroundSet(1)).size(), 1u);
  EXPECT_EQ(oracle::enumerate_hierarchies(GroundSet(2)).size(), 1u);
  EXPECT_EQ(oracle::enumerate_hierarchies(GroundSet(3)).size(), 3u);
  EXPECT_EQ(oracle::enumerate_hierarchies(GroundSet(4)).size(), 15u);
  EXPECT_EQ(oracle::enumerate_hierarchies(GroundSet(5)).size(), 105u);
  for (int n = 2; n <= 8; ++n) {
    std::size_t count = 0;
    oracle::for_each_hierarchy(n, ConstantModel(n),
                               [&](const std::vector<Split>&, LogWeight) { ++count; });
    EXPECT_EQ(count, testing::odd_product(2 * n - 3));
  }
}

TEST(Oracle, HierarchiesAreDistinctAndValid) {
  for (int n = 2; n <= 7; ++n) {
    std::set<std::string> seen;
    for (const Hierarchy& h : oracle::enumerate_hierarchies(GroundSet(n))) {
      EXPECT_TRUE(h.spans_ground_set());
      EXPECT_EQ(h.splits().size(), static_cast<std::size_t>(n - 1));
      EXPECT_TRUE(seen.insert(h.signature()).second) << h.signature();
    }
  }
}

TEST(Oracle, RefusesLargeGroundSets) {
  try {
    oracle::enumerate_hierarchies(GroundSet(9));
    FAIL() << "expected refusal";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("n > 8"), std::string::npos);
  }
  EXPECT_THROW(oracle::oracle_summary(testing::random_dasgupta(9, 1)), std::domain_error);
}

TEST(Oracle, ConstantModelPosteriorIsUniform) {
  const auto s = oracle::oracle_summary(ConstantModel(5));
  EXPECT_NEAR(s.log_z, std::log(105.0), 1e-12);
  for (const auto& [sig, lp] : s.log_phi_by_signature) {
    EXPECT_NEAR(s.log_posterior(sig), -std::log(105.0), 1e-12);
  }
}

TEST(Oracle, TwoLeavesHaveCertainPosterior) {
  const auto s = oracle::oracle_summary(testing::random_correlation(2, 3));
  ASSERT_EQ(s.log_phi_by_signature.size(), 1u);
  EXPECT_NEAR(s.log_posterior(s.log_phi_by_signature.begin()->first), 0.0, 1e-15);
}

TEST(Oracle, SummaryIsSelfConsistent) {
  const CorrelationModel m = testing::random_correlation(6, 55);
  const auto s = oracle::oracle_summary(m);
  EXPECT_EQ(s.hierarchy_count, 945u);
  EXPECT_NEAR(log_hierarchy_potential(s.best_tree, m), s.best_log_phi, 1e-12);
  EXPECT_NEAR(s.cluster_log_marginal.at(Cluster::full(6).bits()), 0.0, 1e-12);
  double total = 0.0;
  for (const auto& [sig, lp] : s.log_phi_by_signature) {
    total += std::exp(s.log_posterior(sig));
    EXPECT_LE(lp, s.best_log_phi);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

}  // namespace
}  // namespace hct
