#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hct/cluster.hpp"
#include "hct/hierarchy.hpp"
#include "hct/log_math.hpp"
#include "hct/models.hpp"

// Brute-force enumeration over every binary hierarchy. Shares no memoization
// or split enumeration with the trellis code; clusters are handled as explicit
// member lists here.
namespace hct::oracle {

inline constexpr int kOracleLeafCap = 8;

namespace detail {

inline std::uint64_t bits_of(const std::vector<int>& members) {
  std::uint64_t b = 0;
  for (int m : members) b |= std::uint64_t{1} << m;
  return b;
}

// Every way to split `members` into two blocks, the first holding members[0].
inline std::vector<std::pair<std::vector<int>, std::vector<int>>> bipartitions(
    const std::vector<int>& members) {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
  const int k = static_cast<int>(members.size());
  const int free = k - 1;
  for (long code = 0; code < (1L << free) - 1; ++code) {
    std::vector<int> a{members[0]};
    std::vector<int> b;
    for (int j = 0; j < free; ++j) {
      if ((code >> j) & 1L) {
        a.push_back(members[j + 1]);
      } else {
        b.push_back(members[j + 1]);
      }
    }
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

// Recursively lists all hierarchies over `members` as split lists, with a
// running log potential.
template <class Model>
void enumerate(const std::vector<std::vector<int>>& pending, std::vector<Split>& acc,
               LogWeight log_phi, const Model* model,
               const std::function<void(const std::vector<Split>&, LogWeight)>& emit) {
  // Find the first pending block that still needs splitting.
  std::size_t idx = 0;
  while (idx < pending.size() && pending[idx].size() < 2) ++idx;
  if (idx == pending.size()) {
    emit(acc, log_phi);
    return;
  }
  for (auto& [a, b] : bipartitions(pending[idx])) {
    std::vector<std::vector<int>> next;
    next.reserve(pending.size() + 1);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (i != idx) next.push_back(pending[i]);
    }
    next.push_back(a);
    next.push_back(b);
    const Cluster ca(bits_of(a));
    const Cluster cb(bits_of(b));
    LogWeight term = 0.0;
    if (model != nullptr) term = model->log_psi(ca, cb);
    acc.push_back(Split{ca | cb, ca, cb});
    enumerate(next, acc, (log_phi == kLogZero || term == kLogZero) ? kLogZero : log_phi + term,
              model, emit);
    acc.pop_back();
  }
}

inline void check_n(int n) {
  if (n < 1) throw std::domain_error("oracle: n must be positive");
  if (n > kOracleLeafCap) {
    throw std::domain_error("oracle: refusing to enumerate hierarchies for n > 8 (" +
                            std::to_string(n) + " requested)");
  }
}

}  // namespace detail

// Calls emit(splits, log_phi) once per hierarchy on n leaves.
template <PotentialModel Model>
void for_each_hierarchy(int n, const Model& model,
                        const std::function<void(const std::vector<Split>&, LogWeight)>& emit) {
  detail::check_n(n);
  if (model.leaf_count() != n) throw std::domain_error("oracle: model leaf count mismatch");
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  std::vector<Split> acc;
  detail::enumerate(std::vector<std::vector<int>>{all}, acc, 0.0, &model, emit);
}

inline std::vector<Hierarchy> enumerate_hierarchies(const GroundSet& ground) {
  const int n = ground.size();
  detail::check_n(n);
  std::vector<Hierarchy> out;
  if (n == 1) {
    out.push_back(Hierarchy::leaf(1, 0));
    return out;
  }
  ConstantModel flat(n);
  for_each_hierarchy(n, flat, [&](const std::vector<Split>& splits, LogWeight) {
    out.push_back(Hierarchy::from_splits(n, splits));
  });
  return out;
}

struct Summary {
  LogWeight log_z = kLogZero;
  LogWeight best_log_phi = kLogZero;
  Hierarchy best_tree;
  std::size_t hierarchy_count = 0;
  // log P(c | X) for every cluster that appears in some hierarchy.
  std::unordered_map<std::uint64_t, LogWeight> cluster_log_marginal;
  // log phi(H) keyed by Hierarchy::signature().
  std::map<std::string, LogWeight> log_phi_by_signature;

  LogWeight log_posterior(const std::string& signature) const {
    return log_phi_by_signature.at(signature) - log_z;
  }
};

// Direct evaluation of Z, argmax, cluster marginals and the posterior table by
// enumerating every hierarchy. Ties for the argmax keep the first tree seen.
template <PotentialModel Model>
Summary oracle_summary(const Model& model) {
  const int n = model.leaf_count();
  detail::check_n(n);
  Summary s;
  if (n == 1) {
    s.log_z = 0.0;
    s.best_log_phi = 0.0;
    s.best_tree = Hierarchy::leaf(1, 0);
    s.hierarchy_count = 1;
    s.cluster_log_marginal[1] = 0.0;
    s.log_phi_by_signature[s.best_tree.signature()] = 0.0;
    return s;
  }
  std::vector<LogWeight> all_phi;
  std::unordered_map<std::uint64_t, std::vector<LogWeight>> by_cluster;
  std::vector<Split> sorted;
  for_each_hierarchy(n, model, [&](const std::vector<Split>& splits, LogWeight log_phi) {
    ++s.hierarchy_count;
    all_phi.push_back(log_phi);
    for (const Split& sp : splits) by_cluster[sp.parent.bits()].push_back(log_phi);
    if (s.hierarchy_count == 1 || log_phi > s.best_log_phi) {
      s.best_log_phi = log_phi;
      s.best_tree = Hierarchy::from_splits(n, splits);
    }
    sorted = splits;
    std::sort(sorted.begin(), sorted.end());
    std::string sig = std::to_string(Cluster::full(n).bits());
    for (const Split& sp : sorted) {
      sig += ',';
      sig += std::to_string(sp.left.bits());
    }
    s.log_phi_by_signature[std::move(sig)] = log_phi;
  });
  s.log_z = log_sum_exp(all_phi);
  for (auto& [bits, values] : by_cluster) {
    s.cluster_log_marginal[bits] = log_sum_exp(values) - s.log_z;
  }
  for (int i = 0; i < n; ++i) s.cluster_log_marginal[std::uint64_t{1} << i] = 0.0;
  return s;
}

}  // namespace hct::oracle
