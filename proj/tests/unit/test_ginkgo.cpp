#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "hct/ginkgo.hpp"
#include "test_support.hpp"

namespace hct {
namespace {

FourVector vector_of(const ginkgo::GeneratedJet& jet, Cluster c) {
  if (c.is_singleton()) return jet.leaves[c.lowest_leaf()];
  return jet.internal_vectors.at(c);
}

double max_abs_diff(const FourVector& a, const FourVector& b) {
  return std::max({std::abs(a.e - b.e), std::abs(a.px - b.px), std::abs(a.py - b.py),
                   std::abs(a.pz - b.pz)});
}

TEST(Generator, HighCutGivesSingleLeaf) {
  ginkgo::JetConfig c;
  c.t_cut = 1e4;
  const auto jet = ginkgo::generate_jet(c);
  EXPECT_EQ(jet.leaf_count(), 1);
  EXPECT_EQ(jet.truth_log_likelihood, 0.0);
  EXPECT_EQ(jet.tree, Hierarchy::leaf(1, 0));
  EXPECT_EQ(jet.leaves[0].e, c.root.e);
}

TEST(Generator, MomentumConservedAndMassDecreases) {
  ginkgo::JetConfig c;
  c.seed = 12;
  for (const auto& jet : ginkgo::generate_corpus(c, 100)) {
    const Cluster root = jet.tree.root();
    if (jet.leaf_count() > 1) {
      EXPECT_LE(max_abs_diff(jet.internal_vectors.at(root), c.root), 1e-9);
    }
    for (const Split& s : jet.tree.splits()) {
      const FourVector p = vector_of(jet, s.parent);
      const FourVector l = vector_of(jet, s.left);
      const FourVector r = vector_of(jet, s.right);
      EXPECT_LE(max_abs_diff(l + r, p), 1e-9);
      EXPECT_LT(l.squared_mass(), p.squared_mass());
      EXPECT_LT(r.squared_mass(), p.squared_mass());
      EXPECT_GE(p.squared_mass(), c.t_cut);
    }
    for (const FourVector& leaf : jet.leaves) EXPECT_LT(leaf.squared_mass(), c.t_cut);
  }
}

TEST(Generator, LeafCountFilterIsHonored) {
  ginkgo::JetConfig c;
  c.seed = 4;
  c.leaf_count_filter = ginkgo::LeafRange{5, 10};
  for (const auto& jet : ginkgo::generate_corpus(c, 50)) {
    EXPECT_GE(jet.leaf_count(), 5);
    EXPECT_LE(jet.leaf_count(), 10);
  }
}

TEST(Generator, DeterministicPerSeedAndPrefixStable) {
  ginkgo::JetConfig c;
  c.seed = 77;
  const auto a = ginkgo::generate_corpus(c, 10);
  const auto b = ginkgo::generate_corpus(c, 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].tree, b[i].tree);
    ASSERT_EQ(a[i].leaves.size(), b[i].leaves.size());
    for (std::size_t k = 0; k < a[i].leaves.size(); ++k) {
      EXPECT_EQ(a[i].leaves[k].e, b[i].leaves[k].e);
      EXPECT_EQ(a[i].leaves[k].pz, b[i].leaves[k].pz);
    }
    EXPECT_EQ(a[i].truth_log_likelihood, b[i].truth_log_likelihood);
  }
  EXPECT_NE(ginkgo::jet_seed(1, 0), ginkgo::jet_seed(1, 1));
}

TEST(Generator, DrawnMassesStayBelowParent) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double t = ginkgo::draw_child_mass(50.0, 1.5, rng);
    EXPECT_GE(t, 0.0);
    EXPECT_LT(t, 50.0);
  }
}

TEST(Generator, DrawnMassMeanMatchesDensity) {
  // E[t] for the truncated exponential: tp * (1/l - e^-l / (1 - e^-l)).
  const double tp = 10.0;
  const double l = 1.5;
  const double expected = tp * (1.0 / l - std::exp(-l) / (1.0 - std::exp(-l)));
  std::mt19937_64 rng(9);
  double sum = 0.0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) sum += ginkgo::draw_child_mass(tp, l, rng);
  EXPECT_NEAR(sum / draws, expected, 0.02);
}

TEST(Generator, BoostPreservesMass) {
  const FourVector rest{3.0, 1.0, -0.5, 2.0};
  const FourVector frame{500.0, 30.0, -40.0, 400.0};
  const FourVector lab = ginkgo::boost_from_rest(rest, frame);
  EXPECT_NEAR(lab.squared_mass(), rest.squared_mass(), 1e-9);
  const FourVector at_rest{std::sqrt(frame.squared_mass()), 0.0, 0.0, 0.0};
  EXPECT_LE(max_abs_diff(ginkgo::boost_from_rest(at_rest, frame), frame), 1e-9);
}

TEST(Generator, RejectsBadConfig) {
  ginkgo::JetConfig c;
  c.lambda = 0.0;
  EXPECT_THROW(ginkgo::generate_jet(c), std::invalid_argument);
  c.lambda = 1.0;
  c.leaf_count_filter = ginkgo::LeafRange{6, 3};
  EXPECT_THROW(ginkgo::generate_jet(c), std::invalid_argument);
}

}  // namespace
}  // namespace hct
