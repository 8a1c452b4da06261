#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hct/cluster.hpp"
#include "hct/dense_trellis.hpp"
#include "hct/hierarchy.hpp"
#include "hct/log_math.hpp"
#include "hct/models.hpp"

namespace hct {

struct BaselineResult {
  LogWeight log_phi = kLogZero;
  Hierarchy tree;
  // Some merge had zero potential.
  bool zero_merge = false;
};

// Memoizes log psi by (left, right) bits. Results never depend on it.
template <PotentialModel Model>
class PsiCache {
 public:
  explicit PsiCache(const Model& model) : model_(model) {}

  LogWeight operator()(Cluster a, Cluster b) {
    const Cluster parent = a | b;
    if (!a.contains(parent.lowest_leaf())) std::swap(a, b);
    const Key key{a.bits(), b.bits()};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const LogWeight v = model_.log_psi(a, b);
    cache_.emplace(key, v);
    return v;
  }

 private:
  struct Key {
    std::uint64_t a;
    std::uint64_t b;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return std::hash<std::uint64_t>{}(k.a * 0x9E3779B97F4A7C15ULL ^ k.b);
    }
  };

  const Model& model_;
  std::unordered_map<Key, LogWeight, KeyHash> cache_;
};

namespace detail {

// Clusters ordered by their lowest leaf; disjointness makes this a total order.
inline void sort_partition(std::vector<Cluster>& p) {
  std::sort(p.begin(), p.end(),
            [](Cluster a, Cluster b) { return a.lowest_leaf() < b.lowest_leaf(); });
}

inline std::vector<Cluster> merged(const std::vector<Cluster>& p, std::size_t i, std::size_t j) {
  std::vector<Cluster> out;
  out.reserve(p.size() - 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k != i && k != j) out.push_back(p[k]);
  }
  out.push_back(p[i] | p[j]);
  sort_partition(out);
  return out;
}

inline std::vector<Cluster> singletons(int n) {
  std::vector<Cluster> p;
  for (int i = 0; i < n; ++i) p.push_back(Cluster::singleton(i));
  return p;
}

inline LogWeight add_log(LogWeight a, LogWeight b) {
  return (a == kLogZero || b == kLogZero) ? kLogZero : a + b;
}

}  // namespace detail

// Agglomerative clustering that always performs the merge with the largest
// log psi. Ties go to the smallest (lowest-leaf, lowest-leaf) pair.
template <PotentialModel Model>
BaselineResult greedy_cluster(const Model& model) {
  const int n = model.leaf_count();
  BaselineResult r;
  if (n == 1) {
    r.log_phi = 0.0;
    r.tree = Hierarchy::leaf(1, 0);
    return r;
  }
  std::vector<Cluster> part = detail::singletons(n);
  std::vector<Split> splits;
  LogWeight total = 0.0;
  while (part.size() > 1) {
    std::size_t bi = 0;
    std::size_t bj = 1;
    LogWeight best = kLogZero;
    bool found = false;
    for (std::size_t i = 0; i < part.size(); ++i) {
      for (std::size_t j = i + 1; j < part.size(); ++j) {
        const LogWeight v = canonical_log_psi(model, part[i], part[j]);
        if (!found || v > best) {
          best = v;
          bi = i;
          bj = j;
          found = true;
        }
      }
    }
    if (best == kLogZero) r.zero_merge = true;
    total = detail::add_log(total, best);
    splits.push_back(make_split(part[bi], part[bj]));
    part = detail::merged(part, bi, bj);
  }
  r.log_phi = total;
  r.tree = Hierarchy::from_splits(n, std::move(splits));
  return r;
}

struct BeamConfig {
  // 0 selects N(N-1)/2.
  int width = 0;
  // Extra merges looked at when ranking a candidate state.
  int lookahead = 1;
  // States with the same partition whose scores agree this closely are
  // treated as duplicates.
  double tie_tolerance = 1e-12;
};

struct BeamState {
  std::vector<Cluster> partition;  // sorted by lowest leaf
  std::vector<Split> merges;
  LogWeight log_score = 0.0;
};

namespace detail {

template <PotentialModel Model>
LogWeight best_continuation(const std::vector<Cluster>& part, int depth, PsiCache<Model>& psi) {
  if (depth <= 0 || part.size() < 2) return 0.0;
  LogWeight best = kLogZero;
  for (std::size_t i = 0; i < part.size(); ++i) {
    for (std::size_t j = i + 1; j < part.size(); ++j) {
      const LogWeight v = psi(part[i], part[j]);
      if (v == kLogZero) continue;
      const LogWeight rest =
          depth > 1 ? best_continuation(merged(part, i, j), depth - 1, psi) : 0.0;
      best = std::max(best, add_log(v, rest));
    }
  }
  return best;
}

}  // namespace detail

// Level-synchronous beam search over merge sequences. Returns the final beam,
// best state first. Every returned state is a complete hierarchy.
template <PotentialModel Model>
std::vector<BeamState> beam_search_states(const Model& model, const BeamConfig& config = {}) {
  const int n = model.leaf_count();
  if (config.width < 0 || config.lookahead < 0) {
    throw std::invalid_argument("beam search: width and lookahead must be nonnegative");
  }
  const std::size_t width =
      config.width == 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(n) * (n - 1) / 2)
                        : static_cast<std::size_t>(config.width);
  PsiCache<Model> psi(model);
  std::vector<BeamState> beam{BeamState{detail::singletons(n), {}, 0.0}};

  struct Candidate {
    BeamState state;
    LogWeight priority;
  };

  for (int level = 1; level < n; ++level) {
    std::vector<Candidate> cands;
    for (const BeamState& s : beam) {
      for (std::size_t i = 0; i < s.partition.size(); ++i) {
        for (std::size_t j = i + 1; j < s.partition.size(); ++j) {
          BeamState next;
          next.partition = detail::merged(s.partition, i, j);
          next.merges = s.merges;
          next.merges.push_back(make_split(s.partition[i], s.partition[j]));
          next.log_score = detail::add_log(s.log_score, psi(s.partition[i], s.partition[j]));
          const LogWeight ahead = detail::best_continuation(next.partition, config.lookahead, psi);
          const LogWeight priority = detail::add_log(next.log_score, ahead);
          cands.push_back(Candidate{std::move(next), priority});
        }
      }
    }
    // Stable: equal priorities keep generation order.
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return a.priority > b.priority;
    });
    std::map<std::vector<std::uint64_t>, std::vector<LogWeight>> seen;
    beam.clear();
    for (Candidate& c : cands) {
      if (beam.size() >= width) break;
      std::vector<std::uint64_t> key;
      key.reserve(c.state.partition.size());
      for (Cluster cl : c.state.partition) key.push_back(cl.bits());
      auto& scores = seen[key];
      const bool dup = std::any_of(scores.begin(), scores.end(), [&](LogWeight s) {
        return s == c.state.log_score || std::abs(s - c.state.log_score) <= config.tie_tolerance;
      });
      if (dup) continue;
      scores.push_back(c.state.log_score);
      beam.push_back(std::move(c.state));
    }
  }
  std::stable_sort(beam.begin(), beam.end(),
                   [](const BeamState& a, const BeamState& b) { return a.log_score > b.log_score; });
  return beam;
}

template <PotentialModel Model>
BaselineResult beam_search_cluster(const Model& model, const BeamConfig& config = {}) {
  const int n = model.leaf_count();
  BaselineResult r;
  if (n == 1) {
    r.log_phi = 0.0;
    r.tree = Hierarchy::leaf(1, 0);
    return r;
  }
  std::vector<BeamState> beam = beam_search_states(model, config);
  const BeamState& best = beam.front();
  r.log_phi = best.log_score;
  r.zero_merge = best.log_score == kLogZero;
  r.tree = Hierarchy::from_splits(n, best.merges);
  return r;
}

}  // namespace hct
