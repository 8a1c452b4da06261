#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hct/baselines.hpp"
#include "hct/cluster.hpp"
#include "hct/counting.hpp"
#include "hct/dense_trellis.hpp"
#include "hct/ginkgo.hpp"
#include "hct/hierarchy.hpp"
#include "hct/log_math.hpp"
#include "hct/models.hpp"

namespace hct {

enum class OrderingMode { kStandard, kRandom, kNormAscending };

inline std::string_view to_string(OrderingMode m) {
  switch (m) {
    case OrderingMode::kStandard: return "standard";
    case OrderingMode::kRandom: return "random";
    case OrderingMode::kNormAscending: return "norm_ascending";
  }
  return "?";
}

inline OrderingMode parse_ordering_mode(std::string_view s) {
  if (s == "standard") return OrderingMode::kStandard;
  if (s == "random") return OrderingMode::kRandom;
  if (s == "norm_ascending") return OrderingMode::kNormAscending;
  throw std::invalid_argument("unknown leaf ordering: " + std::string(s));
}

// Maps leaves of seed trees and test datasets onto trellis leaf indices.
// Permutations are returned as perm[old] = new.
//  - standard: seed trees are relabeled in depth-first traversal order; test
//    datasets keep their stored order.
//  - random: one permutation drawn from `seed`, shared by trees and datasets.
//  - norm_ascending: leaves sorted by increasing |p|.
struct LeafOrdering {
  OrderingMode mode = OrderingMode::kStandard;
  std::uint64_t seed = 0;

  std::vector<int> for_tree(const Hierarchy& tree, std::span<const FourVector> payloads) const {
    const int n = tree.ground_size();
    if (mode == OrderingMode::kStandard) {
      std::vector<int> perm(n, -1);
      int next = 0;
      std::vector<Cluster> stack{tree.root()};
      while (!stack.empty()) {
        const Cluster c = stack.back();
        stack.pop_back();
        if (c.is_singleton()) {
          perm[c.lowest_leaf()] = next++;
          continue;
        }
        const Split s = *tree.split_of(c);
        stack.push_back(s.right);
        stack.push_back(s.left);
      }
      return perm;
    }
    return for_dataset(n, payloads);
  }

  std::vector<int> for_dataset(int n, std::span<const FourVector> payloads) const {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    switch (mode) {
      case OrderingMode::kStandard:
        return perm;
      case OrderingMode::kRandom: {
        std::mt19937_64 rng(seed);
        for (int i = n - 1; i > 0; --i) {
          const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
          std::swap(perm[i], perm[j]);
        }
        return perm;
      }
      case OrderingMode::kNormAscending: {
        if (static_cast<int>(payloads.size()) != n) {
          throw std::invalid_argument("norm_ascending ordering needs four-vector payloads");
        }
        std::vector<int> by_norm(n);
        std::iota(by_norm.begin(), by_norm.end(), 0);
        std::stable_sort(by_norm.begin(), by_norm.end(), [&](int a, int b) {
          return payloads[a].momentum_norm() < payloads[b].momentum_norm();
        });
        for (int rank = 0; rank < n; ++rank) perm[by_norm[rank]] = rank;
        return perm;
      }
    }
    return perm;
  }

  // Payloads rearranged so that trellis leaf i holds out[i].
  template <class T>
  std::vector<T> apply(std::span<const T> items, const std::vector<int>& perm) const {
    std::vector<T> out(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) out[perm[i]] = items[i];
    return out;
  }

  std::vector<FourVector> arrange_dataset(std::span<const FourVector> payloads) const {
    return apply(payloads, for_dataset(static_cast<int>(payloads.size()), payloads));
  }
};

using ChildPair = std::pair<Cluster, Cluster>;

// Trellis restricted to the vertices and child pairs of a set of seed
// hierarchies. Every stored vertex is realizable in some hierarchy and
// reachable from the root.
class SparseTrellis {
 public:
  using VertexMap = std::map<Cluster, std::vector<ChildPair>>;

  // Seed trees are relabeled with `ordering` before insertion. `payloads`
  // may be empty unless the ordering needs them (one entry per tree).
  static SparseTrellis build_from_trees(std::span<const Hierarchy> trees,
                                        const LeafOrdering& ordering,
                                        std::span<const std::vector<FourVector>> payloads = {}) {
    if (trees.empty()) throw std::domain_error("sparse trellis: no seed trees");
    if (!payloads.empty() && payloads.size() != trees.size()) {
      throw std::domain_error("sparse trellis: payload list must match the tree list");
    }
    const int n = trees.front().ground_size();
    SparseTrellis st(n, ordering);
    for (std::size_t i = 0; i < trees.size(); ++i) {
      const Hierarchy& t = trees[i];
      if (t.ground_size() != n || !t.spans_ground_set()) {
        throw std::domain_error("sparse trellis: seed trees must share one leaf count");
      }
      std::span<const FourVector> p;
      if (!payloads.empty()) p = payloads[i];
      st.insert(relabel(t, ordering.for_tree(t, p)));
    }
    st.finalize();
    return st;
  }

  // Rebuilds from explicit vertices and pairs (e.g. a deserialized file).
  // Pairs are canonicalized; unrealizable or unreachable parts are pruned.
  static SparseTrellis from_vertices(int n, const LeafOrdering& ordering, const VertexMap& v) {
    SparseTrellis st(n, ordering);
    for (const auto& [parent, pairs] : v) {
      if (parent.empty() || !parent.within(n)) {
        throw std::domain_error("sparse trellis: vertex outside the ground set");
      }
      auto& dst = st.vertices_[parent];
      for (const auto& [a, b] : pairs) {
        const Split s = make_split(a, b);
        if (s.parent != parent) throw std::domain_error("sparse trellis: pair does not cover vertex");
        dst.emplace_back(s.left, s.right);
      }
    }
    st.finalize();
    return st;
  }

  int leaf_count() const { return n_; }
  const LeafOrdering& ordering() const { return ordering_; }
  Cluster root() const { return Cluster::full(n_); }
  const VertexMap& vertices() const { return vertices_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const {
    std::size_t e = 0;
    for (const auto& [c, pairs] : vertices_) e += pairs.size();
    return e;
  }

  const std::vector<ChildPair>& child_pairs(Cluster c) const {
    static const std::vector<ChildPair> none;
    auto it = vertices_.find(c);
    return it == vertices_.end() ? none : it->second;
  }

  // Whether a (trellis-labeled) hierarchy is realizable.
  bool realizes(const Hierarchy& h) const {
    if (h.ground_size() != n_ || !h.spans_ground_set()) return false;
    return std::all_of(h.splits().begin(), h.splits().end(), [&](const Split& s) {
      const auto& pairs = child_pairs(s.parent);
      return std::binary_search(pairs.begin(), pairs.end(), ChildPair{s.left, s.right});
    });
  }

  // Vertices sorted by (popcount, bits): children always precede parents.
  const std::vector<Cluster>& bottom_up_order() const { return order_; }

  const BigUint& count_hierarchies() const { return count_; }

  BigRational sparsity_index() const { return BigRational(count_, hierarchy_count(n_)); }

  double sparsity_value() const { return sparsity_index().convert_to<double>(); }

 private:
  SparseTrellis(int n, LeafOrdering ordering) : n_(n), ordering_(ordering) {
    if (n < 1 || n > kMaxLeaves) throw std::domain_error("sparse trellis: bad leaf count");
  }

  void insert(const Hierarchy& h) {
    for (const Split& s : h.splits()) vertices_[s.parent].emplace_back(s.left, s.right);
  }

  void finalize() {
    for (int i = 0; i < n_; ++i) vertices_[Cluster::singleton(i)];
    for (auto& [c, pairs] : vertices_) {
      std::sort(pairs.begin(), pairs.end());
      pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    }
    std::vector<Cluster> order;
    for (const auto& [c, pairs] : vertices_) order.push_back(c);
    std::stable_sort(order.begin(), order.end(),
                     [](Cluster a, Cluster b) { return a.size() < b.size(); });

    // Bottom-up: drop pairs whose children are not realizable, then vertices
    // left without pairs.
    std::unordered_map<Cluster, BigUint> counts;
    for (Cluster c : order) {
      auto& pairs = vertices_[c];
      if (c.is_singleton()) {
        pairs.clear();
        counts[c] = 1;
        continue;
      }
      std::erase_if(pairs, [&](const ChildPair& p) {
        return !counts.contains(p.first) || !counts.contains(p.second);
      });
      if (pairs.empty()) continue;
      BigUint total = 0;
      for (const auto& [l, r] : pairs) total += counts[l] * counts[r];
      counts[c] = total;
    }
    if (!counts.contains(root())) {
      throw std::domain_error("sparse trellis: root is not realizable from the stored pairs");
    }
    // Top-down: keep only vertices reachable from the root.
    std::unordered_map<Cluster, bool> reach{{root(), true}};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (!reach.contains(*it) || !counts.contains(*it)) continue;
      for (const auto& [l, r] : vertices_[*it]) {
        reach[l] = true;
        reach[r] = true;
      }
    }
    std::erase_if(vertices_, [&](const auto& kv) {
      return !reach.contains(kv.first) || !counts.contains(kv.first);
    });
    order_.clear();
    for (Cluster c : order) {
      if (vertices_.contains(c)) order_.push_back(c);
    }
    count_ = counts[root()];
  }

  int n_;
  LeafOrdering ordering_;
  VertexMap vertices_;
  std::vector<Cluster> order_;
  BigUint count_ = 0;
};

// Partition function, MAP and sampling restricted to a sparse trellis.
template <PotentialModel Model>
class SparseEvaluator {
 public:
  SparseEvaluator(const SparseTrellis& trellis, Model model)
      : t_(&trellis), model_(std::move(model)) {
    if (model_.leaf_count() != t_->leaf_count()) {
      throw std::domain_error("sparse inference: model and trellis disagree on n");
    }
    const auto& order = t_->bottom_up_order();
    for (std::size_t i = 0; i < order.size(); ++i) index_[order[i]] = i;
    log_z_.assign(order.size(), kLogZero);
    log_map_.assign(order.size(), kLogZero);
    map_pair_.assign(order.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
      const Cluster c = order[i];
      if (c.is_singleton()) {
        log_z_[i] = 0.0;
        log_map_[i] = 0.0;
        continue;
      }
      LogSumAccumulator z;
      LogWeight best = kLogZero;
      const auto& pairs = t_->child_pairs(c);
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& [l, r] = pairs[k];
        const LogWeight lp = model_.log_psi(l, r);
        if (lp == kLogZero) continue;
        const std::size_t li = index_.at(l);
        const std::size_t ri = index_.at(r);
        z.add(lp + log_z_[li] + log_z_[ri]);
        const LogWeight m = lp + log_map_[li] + log_map_[ri];
        if (m > best) {
          best = m;
          map_pair_[i] = k;
        }
      }
      log_z_[i] = z.value();
      log_map_[i] = best;
    }
  }

  const Model& model() const { return model_; }
  LogWeight log_partition() const { return log_z_[index_.at(t_->root())]; }

  MapResult map() const {
    MapResult r;
    r.log_value = log_map_[index_.at(t_->root())];
    r.degenerate = r.log_value == kLogZero;
    const int n = t_->leaf_count();
    if (n == 1) {
      r.tree = Hierarchy::leaf(1, 0);
      return r;
    }
    std::vector<Split> splits;
    std::vector<Cluster> stack{t_->root()};
    while (!stack.empty()) {
      const Cluster c = stack.back();
      stack.pop_back();
      if (c.is_singleton()) continue;
      const auto& [l, rr] = t_->child_pairs(c)[map_pair_[index_.at(c)]];
      splits.push_back(Split{c, l, rr});
      stack.push_back(l);
      stack.push_back(rr);
    }
    r.tree = Hierarchy::from_splits(n, std::move(splits));
    return r;
  }

  // Exact sampler for the posterior restricted to realizable hierarchies.
  class Sampler {
   public:
    Sampler(const SparseEvaluator& e, std::uint64_t seed) : e_(&e), rng_(seed) {
      if (e.log_partition() == kLogZero) throw std::domain_error("degenerate posterior");
    }

    Hierarchy next() {
      const SparseTrellis& t = *e_->t_;
      const int n = t.leaf_count();
      if (n == 1) return Hierarchy::leaf(1, 0);
      std::vector<Split> splits;
      std::vector<Cluster> stack{t.root()};
      std::vector<LogWeight> logw;
      while (!stack.empty()) {
        const Cluster c = stack.back();
        stack.pop_back();
        if (c.is_singleton()) continue;
        const auto& pairs = t.child_pairs(c);
        const LogWeight zc = e_->log_z_[e_->index_.at(c)];
        logw.clear();
        for (const auto& [l, r] : pairs) {
          const LogWeight lp = e_->model_.log_psi(l, r);
          logw.push_back(lp == kLogZero ? kLogZero
                                        : lp + e_->log_z_[e_->index_.at(l)] +
                                              e_->log_z_[e_->index_.at(r)] - zc);
        }
        const int pick = draw_log_categorical(logw, rng_);
        if (pick < 0) throw std::domain_error("degenerate posterior");
        const auto& [l, r] = pairs[pick];
        splits.push_back(Split{c, l, r});
        stack.push_back(r);
        stack.push_back(l);
      }
      return Hierarchy::from_splits(n, std::move(splits));
    }

   private:
    const SparseEvaluator* e_;
    std::mt19937_64 rng_;
  };

  Sampler sampler(std::uint64_t seed) const { return Sampler(*this, seed); }

 private:
  const SparseTrellis* t_;
  Model model_;
  std::unordered_map<Cluster, std::size_t> index_;
  std::vector<LogWeight> log_z_;
  std::vector<LogWeight> log_map_;
  std::vector<std::size_t> map_pair_;
};

// Seeds a sparse trellis with ground-truth trees from the jet generator, all
// with exactly `leaf_count` leaves.
inline SparseTrellis build_simulator_trellis(ginkgo::JetConfig config, int leaf_count,
                                             int num_trees, const LeafOrdering& ordering) {
  if (num_trees < 1) throw std::domain_error("simulator trellis: need at least one tree");
  config.leaf_count_filter = ginkgo::LeafRange{leaf_count, leaf_count};
  const auto jets = ginkgo::generate_corpus(config, num_trees);
  std::vector<Hierarchy> trees;
  std::vector<std::vector<FourVector>> payloads;
  for (const auto& j : jets) {
    trees.push_back(j.tree);
    payloads.push_back(j.leaves);
  }
  return SparseTrellis::build_from_trees(trees, ordering, payloads);
}

// Seeds a sparse trellis with every tree left in the final beam when beam
// search runs on each dataset.
template <PotentialModel Model>
SparseTrellis build_beam_search_trellis(std::span<const Model> datasets, const BeamConfig& beam,
                                        const LeafOrdering& ordering,
                                        std::span<const std::vector<FourVector>> payloads = {}) {
  if (datasets.empty()) throw std::domain_error("beam search trellis: no datasets");
  std::vector<Hierarchy> trees;
  std::vector<std::vector<FourVector>> tree_payloads;
  const int n = datasets.front().leaf_count();
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    if (datasets[i].leaf_count() != n) {
      throw std::domain_error("beam search trellis: datasets must share one leaf count");
    }
    for (const BeamState& s : beam_search_states(datasets[i], beam)) {
      trees.push_back(n == 1 ? Hierarchy::leaf(1, 0) : Hierarchy::from_splits(n, s.merges));
      if (!payloads.empty()) tree_payloads.push_back(payloads[i]);
    }
  }
  return SparseTrellis::build_from_trees(trees, ordering, tree_payloads);
}

inline SparseTrellis build_beam_search_trellis(
    std::span<const std::vector<FourVector>> datasets, double lambda, const BeamConfig& beam,
    const LeafOrdering& ordering) {
  std::vector<GinkgoModel> models;
  models.reserve(datasets.size());
  for (const auto& d : datasets) models.emplace_back(d, lambda);
  return build_beam_search_trellis<GinkgoModel>(models, beam, ordering, datasets);
}

}  // namespace hct
