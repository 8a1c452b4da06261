#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "hct/cluster.hpp"
#include "hct/counting.hpp"
#include "hct/hierarchy.hpp"
#include "hct/log_math.hpp"
#include "hct/models.hpp"

namespace hct {

struct TrellisNode {
  LogWeight log_z = kLogZero;
  LogWeight log_map = kLogZero;
  Cluster map_child;  // empty for singletons
  BigUint tree_count = 0;
};

struct MapResult {
  LogWeight log_value = kLogZero;
  Hierarchy tree;
  // Every hierarchy has zero potential; `tree` is an arbitrary valid one.
  bool degenerate = false;
};

// log psi with the pivot-holding child passed first, so asymmetric models
// see the same argument order everywhere.
template <PotentialModel Model>
LogWeight canonical_log_psi(const Model& model, Cluster a, Cluster b) {
  const Cluster parent = a | b;
  return a.contains(parent.lowest_leaf()) ? model.log_psi(a, b) : model.log_psi(b, a);
}

// Draws a uniform double in [0, 1) from 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Index of the category picked by inverse CDF over log-weights. Returns -1 if
// every weight is zero.
inline int draw_log_categorical(const std::vector<LogWeight>& logw, std::mt19937_64& rng) {
  LogWeight m = kLogZero;
  for (LogWeight v : logw) m = std::max(m, v);
  if (m == kLogZero) return -1;
  double total = 0.0;
  for (LogWeight v : logw) total += std::exp(v - m);
  const double u = uniform_unit(rng) * total;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    if (logw[i] == kLogZero) continue;
    acc += std::exp(logw[i] - m);
    last_positive = static_cast<int>(i);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

// Full cluster trellis: one memo cell per nonempty subset of the ground set.
// Cells are filled bottom-up in popcount order, one model evaluation per
// pivot split; partition function and MAP share the sweep.
template <PotentialModel Model>
class DenseTrellis {
 public:
  explicit DenseTrellis(Model model) : model_(std::move(model)), n_(model_.leaf_count()) {
    if (n_ < 1 || n_ > kDenseLeafCap) {
      throw std::domain_error("dense trellis: leaf count must be in [1, 25]");
    }
  }

  int leaf_count() const { return n_; }
  const Model& model() const { return model_; }
  Cluster root() const { return Cluster::full(n_); }

  LogWeight compute_partition_function() {
    fill();
    return log_z_[root().bits()];
  }

  MapResult compute_map() {
    fill();
    MapResult r;
    r.log_value = log_map_[root().bits()];
    r.degenerate = r.log_value == kLogZero;
    r.tree = map_subtree(root());
    return r;
  }

  // MAP sub-hierarchy rooted at any cluster.
  Hierarchy map_subtree(Cluster c) {
    fill();
    check_cluster(c);
    if (c.is_singleton()) return Hierarchy::leaf(n_, c.lowest_leaf());
    std::vector<Split> splits;
    std::vector<Cluster> stack{c};
    while (!stack.empty()) {
      const Cluster p = stack.back();
      stack.pop_back();
      if (p.is_singleton()) continue;
      const Cluster left(map_child_[p.bits()]);
      const Cluster right = p.minus(left);
      splits.push_back(Split{p, left, right});
      stack.push_back(left);
      stack.push_back(right);
    }
    return Hierarchy::from_splits(n_, std::move(splits));
  }

  LogWeight log_z(Cluster c) {
    fill();
    check_cluster(c);
    return log_z_[c.bits()];
  }

  // log P(c | X): sum of phi over hierarchies containing c, over Z.
  LogWeight marginal_cluster(Cluster c) {
    fill();
    check_cluster(c);
    return contracted_log_z(c, log_z_[c.bits()]) - checked_root_log_z();
  }

  // log P(H_i | X) for a fragment H_i rooted at some cluster X_i.
  LogWeight marginal_subhierarchy(const Hierarchy& fragment) {
    fill();
    if (fragment.ground_size() != n_) {
      throw std::domain_error("marginal_subhierarchy: fragment built over a different ground set");
    }
    const LogWeight seed = log_hierarchy_potential(fragment, model_);
    return contracted_log_z(fragment.root(), seed) - checked_root_log_z();
  }

  // log P(H | X) for a complete hierarchy.
  LogWeight log_posterior(const Hierarchy& h) {
    if (!h.spans_ground_set() || h.ground_size() != n_) {
      throw std::domain_error("log_posterior: hierarchy must span the ground set");
    }
    fill();
    return log_hierarchy_potential(h, model_) - checked_root_log_z();
  }

  // Exact posterior sampler; holds its own random stream and reads the memo.
  class Sampler {
   public:
    Sampler(DenseTrellis& trellis, std::uint64_t seed) : t_(&trellis), rng_(seed) {
      t_->fill();
      t_->checked_root_log_z();
    }

    Hierarchy next() {
      const int n = t_->n_;
      if (n == 1) return Hierarchy::leaf(1, 0);
      std::vector<Split> splits;
      std::vector<Cluster> stack{t_->root()};
      std::vector<LogWeight> logw;
      std::vector<Cluster> lefts;
      while (!stack.empty()) {
        const Cluster p = stack.back();
        stack.pop_back();
        if (p.is_singleton()) continue;
        logw.clear();
        lefts.clear();
        const LogWeight zp = t_->log_z_[p.bits()];
        for_each_pivot_split(p, [&](Cluster left) {
          const Cluster right = p.minus(left);
          const LogWeight lp = t_->model_.log_psi(left, right);
          lefts.push_back(left);
          logw.push_back(lp == kLogZero ? kLogZero
                                        : lp + t_->log_z_[left.bits()] +
                                              t_->log_z_[right.bits()] - zp);
        });
        const int pick = draw_log_categorical(logw, rng_);
        if (pick < 0) throw std::domain_error("degenerate posterior");
        const Cluster left = lefts[pick];
        const Cluster right = p.minus(left);
        splits.push_back(Split{p, left, right});
        stack.push_back(right);
        stack.push_back(left);
      }
      return Hierarchy::from_splits(n, std::move(splits));
    }

   private:
    DenseTrellis* t_;
    std::mt19937_64 rng_;
  };

  Sampler sampler(std::uint64_t seed) { return Sampler(*this, seed); }

  Hierarchy sample_hierarchy(std::uint64_t seed) { return sampler(seed).next(); }

  // Realizable-tree count at the root via the bottom-up counting recurrence.
  BigUint count_hierarchies() {
    fill_counts();
    return BigUint(counts_[root().bits()]);
  }

  TrellisNode node(Cluster c) {
    fill();
    fill_counts();
    check_cluster(c);
    TrellisNode out;
    out.log_z = log_z_[c.bits()];
    out.log_map = log_map_[c.bits()];
    out.map_child = Cluster(map_child_[c.bits()]);
    out.tree_count = BigUint(counts_[c.bits()]);
    return out;
  }

  // Split terms evaluated by the partition-function sweep.
  std::uint64_t operation_count() const { return ops_; }

 private:
  using Count = boost::multiprecision::uint128_t;

  void check_cluster(Cluster c) const {
    if (c.empty() || !c.within(n_)) {
      throw std::domain_error("cluster must be a nonempty subset of the ground set");
    }
  }

  LogWeight checked_root_log_z() const {
    const LogWeight z = log_z_[root().bits()];
    if (z == kLogZero) throw std::domain_error("degenerate posterior");
    return z;
  }

  // Visits every n-bit mask with k bits set, in increasing order.
  template <class Fn>
  void for_each_mask_of_size(int k, Fn&& fn) const {
    const std::uint64_t limit = std::uint64_t{1} << n_;
    std::uint64_t x = (std::uint64_t{1} << k) - 1;
    while (x < limit) {
      fn(Cluster(x));
      const std::uint64_t c = x & (~x + 1);
      const std::uint64_t r = x + c;
      x = (((r ^ x) >> 2) / c) | r;
    }
  }

  void fill() {
    if (filled_) return;
    const std::size_t cells = std::size_t{1} << n_;
    log_z_.assign(cells, kLogZero);
    log_map_.assign(cells, kLogZero);
    map_child_.assign(cells, 0);
    ops_ = 0;
    for (int i = 0; i < n_; ++i) {
      log_z_[std::size_t{1} << i] = 0.0;
      log_map_[std::size_t{1} << i] = 0.0;
    }
    for (int k = 2; k <= n_; ++k) {
      for_each_mask_of_size(k, [&](Cluster p) {
        LogSumAccumulator z;
        LogWeight best = kLogZero;
        std::uint64_t best_left = 0;
        for_each_pivot_split(p, [&](Cluster left) {
          const Cluster right = p.minus(left);
          ++ops_;
          if (best_left == 0) best_left = left.bits();
          const LogWeight lp = model_.log_psi(left, right);
          if (lp == kLogZero) return;
          z.add(lp + log_z_[left.bits()] + log_z_[right.bits()]);
          const LogWeight m = lp + log_map_[left.bits()] + log_map_[right.bits()];
          if (m > best) {
            best = m;
            best_left = left.bits();
          }
        });
        log_z_[p.bits()] = z.value();
        log_map_[p.bits()] = best;
        map_child_[p.bits()] = static_cast<std::uint32_t>(best_left);
      });
    }
    filled_ = true;
  }

  void fill_counts() {
    if (!counts_.empty()) return;
    counts_.assign(std::size_t{1} << n_, 0);
    for (int i = 0; i < n_; ++i) counts_[std::size_t{1} << i] = 1;
    for (int k = 2; k <= n_; ++k) {
      for_each_mask_of_size(k, [&](Cluster p) {
        Count total = 0;
        for_each_pivot_split(p, [&](Cluster left) {
          total += counts_[left.bits()] * counts_[p.minus(left).bits()];
        });
        counts_[p.bits()] = total;
      });
    }
  }

  // log of the summed potential of all hierarchies that contain `xi` as a
  // node, with the subtree under xi contributing exp(seed). Equivalent to
  // running the partition recursion on the ground set with xi contracted to
  // one pseudo-leaf; psi always sees the expanded leaf sets.
  LogWeight contracted_log_z(Cluster xi, LogWeight seed) {
    check_cluster(xi);
    const Cluster rest = root().minus(xi);
    if (rest.empty()) return seed;
    const int r = rest.size();
    // expand[c] maps a compressed subset of `rest` back to leaf bits.
    std::vector<std::uint32_t> expand(std::size_t{1} << r, 0);
    const std::vector<int> rest_leaves = rest.leaves();
    for (std::size_t c = 1; c < expand.size(); ++c) {
      const int low = std::countr_zero(c);
      expand[c] = expand[c & (c - 1)] | (std::uint32_t{1} << rest_leaves[low]);
    }
    std::vector<LogWeight> zc(expand.size(), kLogZero);
    zc[0] = seed;
    for (std::size_t s = 1; s < expand.size(); ++s) {
      const Cluster a = xi | Cluster(expand[s]);
      LogSumAccumulator acc;
      // Left child xi + T for every strict subset T of s.
      std::size_t t = 0;
      while (t != s) {
        if (zc[t] != kLogZero) {
          const Cluster left = xi | Cluster(expand[t]);
          const Cluster right = a.minus(left);
          const LogWeight lp = canonical_log_psi(model_, left, right);
          if (lp != kLogZero) acc.add(lp + zc[t] + log_z_[right.bits()]);
        }
        t = (t - s) & s;
      }
      zc[s] = acc.value();
    }
    return zc.back();
  }

  Model model_;
  int n_;
  bool filled_ = false;
  std::uint64_t ops_ = 0;
  std::vector<LogWeight> log_z_;
  std::vector<LogWeight> log_map_;
  std::vector<std::uint32_t> map_child_;
  std::vector<Count> counts_;
};

}  // namespace hct
