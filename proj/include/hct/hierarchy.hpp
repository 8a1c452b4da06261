#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hct/cluster.hpp"

namespace hct {

// One internal node and its two children. `left` always holds the parent's
// lowest-indexed leaf.
struct Split {
  Cluster parent;
  Cluster left;
  Cluster right;

  auto operator<=>(const Split&) const = default;
};

inline Split make_split(Cluster a, Cluster b) {
  if (a.empty() || b.empty() || !a.disjoint(b)) {
    throw std::domain_error("split children must be nonempty and disjoint");
  }
  const Cluster parent = a | b;
  if (b.contains(parent.lowest_leaf())) std::swap(a, b);
  return Split{parent, a, b};
}

// A rooted binary hierarchy over the leaves of `root` (the whole ground set,
// or a subset of it for sub-hierarchy fragments). Immutable once built.
class Hierarchy {
 public:
  Hierarchy() = default;

  static Hierarchy leaf(int n, int index) {
    if (index < 0 || index >= n) throw std::domain_error("leaf index out of range");
    Hierarchy h;
    h.n_ = n;
    h.root_ = Cluster::singleton(index);
    return h;
  }

  // Builds from a list of splits; child order is canonicalized.
  static Hierarchy from_splits(int n, std::vector<Split> splits) {
    if (n < 1 || n > kMaxLeaves) throw std::domain_error("hierarchy: bad leaf count");
    for (Split& s : splits) s = make_split(s.left, s.right);
    std::sort(splits.begin(), splits.end());
    Hierarchy h;
    h.n_ = n;
    if (splits.empty()) {
      throw std::domain_error("hierarchy: no splits; use Hierarchy::leaf for singletons");
    }
    h.root_ = std::max_element(splits.begin(), splits.end(), [](const Split& a, const Split& b) {
                return a.parent.size() < b.parent.size();
              })->parent;
    h.splits_ = std::move(splits);
    h.validate();
    return h;
  }

  // Builds from the node set alone, deriving the child structure.
  static Hierarchy from_nodes(int n, std::vector<Cluster> nodes) {
    if (nodes.empty()) throw std::domain_error("hierarchy: empty node set");
    std::sort(nodes.begin(), nodes.end());
    if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
      throw std::domain_error("hierarchy: duplicate node");
    }
    // Larger clusters first so each node's parent is found before smaller ones.
    std::stable_sort(nodes.begin(), nodes.end(),
                     [](Cluster a, Cluster b) { return a.size() > b.size(); });
    const Cluster root = nodes.front();
    if (nodes.size() == 1) {
      if (!root.is_singleton()) throw std::domain_error("hierarchy: missing nodes");
      return leaf(n, root.lowest_leaf());
    }
    std::map<Cluster, std::vector<Cluster>> kids;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      // The parent is the smallest strictly larger node containing this one.
      std::optional<Cluster> parent;
      for (std::size_t j = 0; j < i; ++j) {
        const Cluster c = nodes[j];
        if (c.size() > nodes[i].size() && c.contains(nodes[i])) {
          if (!parent || c.size() < parent->size()) parent = c;
        } else if (!c.disjoint(nodes[i]) && !c.contains(nodes[i])) {
          throw std::domain_error("hierarchy: nodes are not nested");
        }
      }
      if (!parent) throw std::domain_error("hierarchy: node outside the root");
      kids[*parent].push_back(nodes[i]);
    }
    std::vector<Split> splits;
    for (auto& [parent, children] : kids) {
      if (children.size() != 2 || (children[0] | children[1]) != parent) {
        throw std::domain_error("hierarchy: a node is not split into exactly two children");
      }
      splits.push_back(make_split(children[0], children[1]));
    }
    return from_splits(n, std::move(splits));
  }

  static Hierarchy join(const Hierarchy& a, const Hierarchy& b) {
    if (a.n_ != b.n_) throw std::domain_error("hierarchy join: ground sets differ");
    std::vector<Split> splits = a.splits_;
    splits.insert(splits.end(), b.splits_.begin(), b.splits_.end());
    splits.push_back(make_split(a.root_, b.root_));
    return from_splits(a.n_, std::move(splits));
  }

  int ground_size() const { return n_; }
  Cluster root() const { return root_; }
  int leaf_count() const { return root_.size(); }
  bool spans_ground_set() const { return root_ == Cluster::full(n_); }

  // Internal nodes, sorted by parent bits.
  const std::vector<Split>& splits() const { return splits_; }

  std::optional<Split> split_of(Cluster parent) const {
    auto it = std::lower_bound(splits_.begin(), splits_.end(), parent,
                               [](const Split& s, Cluster c) { return s.parent < c; });
    if (it == splits_.end() || it->parent != parent) return std::nullopt;
    return *it;
  }

  bool contains(Cluster c) const {
    if (c.is_singleton()) return root_.contains(c);
    return split_of(c).has_value();
  }

  // Whether `sub` appears in this hierarchy as a complete subtree.
  bool contains_subtree(const Hierarchy& sub) const {
    if (!contains(sub.root_)) return false;
    return std::all_of(sub.splits_.begin(), sub.splits_.end(),
                       [&](const Split& s) { return split_of(s.parent) == s; });
  }

  // All 2k-1 nodes, sorted by bits.
  std::vector<Cluster> nodes() const {
    std::vector<Cluster> out;
    for (const Split& s : splits_) out.push_back(s.parent);
    for (int leaf : root_.leaves()) out.push_back(Cluster::singleton(leaf));
    std::sort(out.begin(), out.end());
    return out;
  }

  // Canonical text key: internal node bits, sorted, comma separated.
  std::string signature() const {
    std::string s = std::to_string(root_.bits());
    for (const Split& sp : splits_) {
      s += ',';
      s += std::to_string(sp.left.bits());
    }
    return s;
  }

  bool operator==(const Hierarchy& o) const {
    return n_ == o.n_ && root_ == o.root_ && splits_ == o.splits_;
  }

 private:
  void validate() const {
    if (!root_.within(n_)) throw std::domain_error("hierarchy: leaf index beyond ground set");
    if (static_cast<int>(splits_.size()) != root_.size() - 1) {
      throw std::domain_error("hierarchy: wrong number of internal nodes");
    }
    for (std::size_t i = 1; i < splits_.size(); ++i) {
      if (splits_[i].parent == splits_[i - 1].parent) {
        throw std::domain_error("hierarchy: node split twice");
      }
    }
    // Every internal node other than the root must be a child of exactly one
    // split, and every non-singleton child must itself be split.
    std::map<Cluster, int> child_refs;
    for (const Split& s : splits_) {
      if (!root_.contains(s.parent)) throw std::domain_error("hierarchy: node outside the root");
      ++child_refs[s.left];
      ++child_refs[s.right];
    }
    for (const auto& [c, refs] : child_refs) {
      if (refs != 1) throw std::domain_error("hierarchy: node has several parents");
      if (!c.is_singleton() && !split_of(c)) {
        throw std::domain_error("hierarchy: internal node without children");
      }
    }
    for (const Split& s : splits_) {
      if (s.parent != root_ && !child_refs.contains(s.parent)) {
        throw std::domain_error("hierarchy: disconnected node");
      }
    }
  }

  int n_ = 0;
  Cluster root_;
  std::vector<Split> splits_;
};

// Leaf relabeling: perm[old] = new.
inline Cluster relabel(Cluster c, const std::vector<int>& perm) {
  std::uint64_t b = 0;
  for (int leaf : c.leaves()) b |= std::uint64_t{1} << perm.at(leaf);
  return Cluster(b);
}

inline Hierarchy relabel(const Hierarchy& h, const std::vector<int>& perm) {
  if (h.root().is_singleton()) {
    return Hierarchy::leaf(h.ground_size(), perm.at(h.root().lowest_leaf()));
  }
  std::vector<Split> splits;
  splits.reserve(h.splits().size());
  for (const Split& s : h.splits()) {
    splits.push_back(make_split(relabel(s.left, perm), relabel(s.right, perm)));
  }
  return Hierarchy::from_splits(h.ground_size(), std::move(splits));
}

}  // namespace hct
