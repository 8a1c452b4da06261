#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hct/cluster.hpp"
#include "hct/dense_trellis.hpp"
#include "hct/hierarchy.hpp"
#include "hct/log_math.hpp"
#include "hct/models.hpp"

namespace hct::ginkgo {

inline constexpr int kSplitRejectionBudget = 10'000;
inline constexpr int kJetResampleBudget = 10'000;

struct LeafRange {
  int min = 1;
  int max = kMaxLeaves;
};

struct JetConfig {
  // Default root: mass 80 moving along z with |p| = 400.
  FourVector root{std::sqrt(400.0 * 400.0 + 80.0 * 80.0), 0.0, 0.0, 400.0};
  double lambda = 1.5;
  double t_cut = 100.0;
  std::uint64_t seed = 0;
  std::optional<LeafRange> leaf_count_filter;

  void validate() const {
    if (!(lambda > 0) || !(t_cut > 0)) {
      throw std::invalid_argument("jet config: lambda and t_cut must be > 0");
    }
    if (!(root.e > 0) || !(root.squared_mass() > 0)) {
      throw std::invalid_argument("jet config: root needs E > 0 and positive squared mass");
    }
    if (leaf_count_filter &&
        (leaf_count_filter->min < 1 || leaf_count_filter->max > kMaxLeaves ||
         leaf_count_filter->min > leaf_count_filter->max)) {
      throw std::invalid_argument("jet config: bad leaf count range");
    }
  }
};

struct GeneratedJet {
  Hierarchy tree;
  std::vector<FourVector> leaves;
  LogWeight truth_log_likelihood = 0.0;
  // Four-vector of every internal node, keyed by cluster.
  std::map<Cluster, FourVector> internal_vectors;
  double lambda = 1.0;
  double t_cut = 1.0;
  std::uint64_t seed = 0;

  int leaf_count() const { return static_cast<int>(leaves.size()); }
  GinkgoModel model() const { return GinkgoModel(leaves, lambda); }
};

// Inverse-CDF draw from f(t | t_parent, lambda) on [0, t_parent).
inline double draw_child_mass(double t_parent, double lambda, std::mt19937_64& rng) {
  const double u = uniform_unit(rng);
  // 1 - u (1 - e^{-lambda}), written with expm1 for precision.
  return -t_parent / lambda * std::log1p(u * std::expm1(-lambda));
}

// Boosts a rest-frame four-vector into the frame where `frame` is measured.
inline FourVector boost_from_rest(const FourVector& rest, const FourVector& frame) {
  const double mass = std::sqrt(frame.squared_mass());
  const double bx = frame.px / frame.e;
  const double by = frame.py / frame.e;
  const double bz = frame.pz / frame.e;
  const double b2 = bx * bx + by * by + bz * bz;
  const double gamma = frame.e / mass;
  const double bp = bx * rest.px + by * rest.py + bz * rest.pz;
  const double g2 = b2 > 0 ? (gamma - 1.0) / b2 : 0.0;
  const double k = g2 * bp + gamma * rest.e;
  return {gamma * (rest.e + bp), rest.px + k * bx, rest.py + k * by, rest.pz + k * bz};
}

namespace detail {

struct Builder {
  const JetConfig& config;
  std::mt19937_64& rng;
  std::vector<FourVector> leaves;
  LogWeight log_likelihood = 0.0;
  bool overflow = false;

  // Returns the cluster of leaves produced below `x`, and records splits.
  Cluster grow(const FourVector& x, std::vector<Split>& splits,
               std::map<Cluster, FourVector>& internal) {
    const double tp = x.squared_mass();
    if (tp < config.t_cut) {
      if (static_cast<int>(leaves.size()) >= kMaxLeaves) {
        overflow = true;
        return Cluster();
      }
      leaves.push_back(x);
      return Cluster::singleton(static_cast<int>(leaves.size()) - 1);
    }
    double t1 = 0.0;
    double t2 = 0.0;
    int tries = 0;
    do {
      if (++tries > kSplitRejectionBudget) {
        throw std::runtime_error("ginkgo: split rejection budget exhausted");
      }
      t1 = draw_child_mass(tp, config.lambda, rng);
      t2 = draw_child_mass(tp, config.lambda, rng);
    } while (std::sqrt(t1) + std::sqrt(t2) > std::sqrt(tp));

    // Two-body decay in the parent rest frame.
    const double m = std::sqrt(tp);
    const double m1 = std::sqrt(t1);
    const double m2 = std::sqrt(t2);
    const double arg = (tp - (m1 + m2) * (m1 + m2)) * (tp - (m1 - m2) * (m1 - m2));
    const double pstar = std::sqrt(std::max(arg, 0.0)) / (2.0 * m);
    const double cos_theta = 2.0 * uniform_unit(rng) - 1.0;
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    const double phi = 2.0 * std::numbers::pi * uniform_unit(rng);
    const FourVector rest1{std::sqrt(pstar * pstar + t1), pstar * sin_theta * std::cos(phi),
                           pstar * sin_theta * std::sin(phi), pstar * cos_theta};
    const FourVector x1 = boost_from_rest(rest1, x);
    const FourVector x2 = x - x1;

    const LogWeight term = log_splitting_density(x1.squared_mass(), tp, config.lambda) +
                           log_splitting_density(x2.squared_mass(), tp, config.lambda);
    log_likelihood += term;

    const Cluster c1 = grow(x1, splits, internal);
    if (overflow) return Cluster();
    const Cluster c2 = grow(x2, splits, internal);
    if (overflow) return Cluster();
    splits.push_back(make_split(c1, c2));
    internal[c1 | c2] = x;
    return c1 | c2;
  }
};

inline std::optional<GeneratedJet> generate_once(const JetConfig& config, std::mt19937_64& rng) {
  Builder b{config, rng, {}, 0.0, false};
  std::vector<Split> splits;
  std::map<Cluster, FourVector> internal;
  b.grow(config.root, splits, internal);
  if (b.overflow) return std::nullopt;
  GeneratedJet jet;
  const int n = static_cast<int>(b.leaves.size());
  jet.tree = splits.empty() ? Hierarchy::leaf(1, 0) : Hierarchy::from_splits(n, std::move(splits));
  jet.leaves = std::move(b.leaves);
  jet.truth_log_likelihood = b.log_likelihood;
  jet.internal_vectors = std::move(internal);
  jet.lambda = config.lambda;
  jet.t_cut = config.t_cut;
  jet.seed = config.seed;
  return jet;
}

}  // namespace detail

// Recursive two-body splitting from the root four-vector. Leaves are indexed
// in depth-first order. The recorded truth log-likelihood sums the per-split
// densities psi evaluates, so it matches log_hierarchy_potential on the tree.
inline GeneratedJet generate_jet(const JetConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  for (int attempt = 0; attempt < kJetResampleBudget; ++attempt) {
    auto jet = detail::generate_once(config, rng);
    if (!jet) continue;
    if (!config.leaf_count_filter) return *jet;
    const int n = jet->leaf_count();
    if (n >= config.leaf_count_filter->min && n <= config.leaf_count_filter->max) return *jet;
  }
  throw std::runtime_error("ginkgo: could not produce a jet with the requested leaf count");
}

// Independent per-jet seeds derived from a corpus seed (splitmix64).
inline std::uint64_t jet_seed(std::uint64_t corpus_seed, std::uint64_t index) {
  std::uint64_t z = corpus_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::vector<GeneratedJet> generate_corpus(JetConfig config, int count) {
  std::vector<GeneratedJet> out;
  out.reserve(count);
  const std::uint64_t base = config.seed;
  for (int i = 0; i < count; ++i) {
    config.seed = jet_seed(base, static_cast<std::uint64_t>(i));
    out.push_back(generate_jet(config));
  }
  return out;
}

}  // namespace hct::ginkgo
