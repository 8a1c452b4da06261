#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hct {

// Widest ground set a Cluster can address.
inline constexpr int kMaxLeaves = 64;
// Guard for structures that allocate per-subset storage (dense trellis).
inline constexpr int kDenseLeafCap = 25;

// A nonempty subset of leaf indices, stored as a 64-bit set.
class Cluster {
 public:
  constexpr Cluster() = default;
  constexpr explicit Cluster(std::uint64_t bits) : bits_(bits) {}

  static constexpr Cluster singleton(int leaf) {
    return Cluster(std::uint64_t{1} << leaf);
  }
  static constexpr Cluster full(int n) {
    return Cluster(n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool is_singleton() const { return std::has_single_bit(bits_); }
  // Lowest-indexed leaf; the pivot used by every split enumeration.
  constexpr int lowest_leaf() const { return std::countr_zero(bits_); }
  constexpr bool contains(int leaf) const { return (bits_ >> leaf) & 1u; }
  constexpr bool contains(Cluster other) const {
    return (other.bits_ & ~bits_) == 0;
  }
  constexpr bool disjoint(Cluster other) const {
    return (bits_ & other.bits_) == 0;
  }
  constexpr bool within(int n) const {
    return n >= 64 || (bits_ >> n) == 0;
  }

  constexpr Cluster operator|(Cluster o) const { return Cluster(bits_ | o.bits_); }
  constexpr Cluster operator&(Cluster o) const { return Cluster(bits_ & o.bits_); }
  constexpr Cluster minus(Cluster o) const { return Cluster(bits_ & ~o.bits_); }

  constexpr auto operator<=>(const Cluster&) const = default;

  std::vector<int> leaves() const {
    std::vector<int> out;
    out.reserve(size());
    for (std::uint64_t b = bits_; b != 0; b &= b - 1) {
      out.push_back(std::countr_zero(b));
    }
    return out;
  }

  std::string to_string() const { return std::to_string(bits_); }

 private:
  std::uint64_t bits_ = 0;
};

inline Cluster cluster_of(const std::vector<int>& leaves) {
  std::uint64_t b = 0;
  for (int i : leaves) {
    if (i < 0 || i >= kMaxLeaves) throw std::domain_error("leaf index out of range");
    b |= std::uint64_t{1} << i;
  }
  return Cluster(b);
}

class GroundSet {
 public:
  explicit GroundSet(int n) : n_(n) {
    check_size(n);
    labels_.reserve(n);
    for (int i = 0; i < n; ++i) labels_.push_back(std::to_string(i));
  }
  explicit GroundSet(std::vector<std::string> labels)
      : n_(static_cast<int>(labels.size())), labels_(std::move(labels)) {
    check_size(n_);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      for (std::size_t j = i + 1; j < labels_.size(); ++j) {
        if (labels_[i] == labels_[j]) {
          throw std::invalid_argument("duplicate leaf label: " + labels_[i]);
        }
      }
    }
  }

  int size() const { return n_; }
  const std::vector<std::string>& labels() const { return labels_; }
  Cluster full() const { return Cluster::full(n_); }
  bool admits(Cluster c) const { return !c.empty() && c.within(n_); }

 private:
  static void check_size(int n) {
    if (n < 1 || n > kMaxLeaves) {
      throw std::invalid_argument("ground set size must be in [1, 64]");
    }
  }

  int n_;
  std::vector<std::string> labels_;
};

// parent \ child, for a strict nonempty subset child of parent.
inline Cluster complement(Cluster parent, Cluster child) {
  if (child.empty() || child == parent || !parent.contains(child)) {
    throw std::domain_error("complement: child must be a strict nonempty subset of parent");
  }
  return parent.minus(child);
}

// Calls fn(left) for each strict subset `left` of parent holding the pivot
// (parent's lowest leaf), in increasing bit order. Each unordered bipartition
// of parent is visited exactly once.
template <class Fn>
inline void for_each_pivot_split(Cluster parent, Fn&& fn) {
  const std::uint64_t p = parent.bits();
  const std::uint64_t pivot = p & (~p + 1);
  const std::uint64_t rest = p ^ pivot;
  std::uint64_t s = 0;
  while (true) {
    if (s == rest) break;
    fn(Cluster(pivot | s));
    s = (s - rest) & rest;
  }
}

inline std::vector<Cluster> proper_splits_containing_pivot(Cluster parent) {
  if (parent.size() < 2) {
    throw std::domain_error("proper_splits_containing_pivot: parent needs at least 2 leaves");
  }
  std::vector<Cluster> out;
  out.reserve((std::size_t{1} << (parent.size() - 1)) - 1);
  for_each_pivot_split(parent, [&](Cluster c) { out.push_back(c); });
  return out;
}

}  // namespace hct

template <>
struct std::hash<hct::Cluster> {
  std::size_t operator()(hct::Cluster c) const noexcept {
    return std::hash<std::uint64_t>{}(c.bits());
  }
};
