#pragma once

#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "hct/cluster.hpp"
#include "hct/hierarchy.hpp"
#include "hct/log_math.hpp"

namespace hct {

// A potential model scores an ordered pair of disjoint sibling clusters with
// log psi. Evaluation must be a pure function of the two clusters.
template <class M>
concept PotentialModel = requires(const M& m, Cluster a, Cluster b) {
  { m.log_psi(a, b) } -> std::convertible_to<LogWeight>;
  { m.leaf_count() } -> std::convertible_to<int>;
};

namespace detail {
inline void require_disjoint(Cluster left, Cluster right) {
  if (left.empty() || right.empty() || !left.disjoint(right)) {
    throw std::domain_error("log_psi: clusters must be nonempty and disjoint");
  }
}
}  // namespace detail

struct ModelParams {
  double beta = 1.0;
  double lambda = 1.5;
  double t_cut = 100.0;

  void validate() const {
    if (!(beta > 0) || !(lambda > 0) || !(t_cut > 0)) {
      throw std::invalid_argument("model parameters beta, lambda, t_cut must be > 0");
    }
  }
};

// Symmetric n x n matrix with zero diagonal.
class PairwiseWeights {
 public:
  struct Entry {
    int i;
    int j;
    double w;
  };

  explicit PairwiseWeights(int n) : n_(n), w_(static_cast<std::size_t>(n) * n, 0.0) {
    if (n < 1 || n > kMaxLeaves) throw std::invalid_argument("pairwise weights: bad n");
  }

  // Upper-triangular triples; i < j, no duplicates.
  static PairwiseWeights from_triples(int n, const std::vector<Entry>& entries) {
    PairwiseWeights pw(n);
    std::vector<bool> seen(static_cast<std::size_t>(n) * n, false);
    for (const Entry& e : entries) {
      if (e.i < 0 || e.j >= n || e.i >= e.j) {
        throw std::invalid_argument("pairwise weights: need 0 <= i < j < n");
      }
      if (!std::isfinite(e.w)) throw std::invalid_argument("pairwise weights: non-finite weight");
      auto idx = static_cast<std::size_t>(e.i) * n + e.j;
      if (seen[idx]) throw std::invalid_argument("pairwise weights: duplicate (i, j)");
      seen[idx] = true;
      pw.set(e.i, e.j, e.w);
    }
    return pw;
  }

  int size() const { return n_; }
  double at(int i, int j) const { return w_[static_cast<std::size_t>(i) * n_ + j]; }
  void set(int i, int j, double w) {
    if (i == j) throw std::invalid_argument("pairwise weights: diagonal must stay zero");
    w_[static_cast<std::size_t>(i) * n_ + j] = w;
    w_[static_cast<std::size_t>(j) * n_ + i] = w;
  }

  std::vector<Entry> triples() const {
    std::vector<Entry> out;
    for (int i = 0; i < n_; ++i) {
      for (int j = i + 1; j < n_; ++j) out.push_back({i, j, at(i, j)});
    }
    return out;
  }

 private:
  int n_;
  std::vector<double> w_;
};

struct FourVector {
  double e = 0.0;
  double px = 0.0;
  double py = 0.0;
  double pz = 0.0;

  FourVector& operator+=(const FourVector& o) {
    e += o.e;
    px += o.px;
    py += o.py;
    pz += o.pz;
    return *this;
  }
  friend FourVector operator+(FourVector a, const FourVector& b) { return a += b; }
  friend FourVector operator-(const FourVector& a, const FourVector& b) {
    return {a.e - b.e, a.px - b.px, a.py - b.py, a.pz - b.pz};
  }
  bool operator==(const FourVector&) const = default;

  double momentum_squared() const { return px * px + py * py + pz * pz; }
  double momentum_norm() const { return std::sqrt(momentum_squared()); }
  // t = E^2 - |p|^2
  double squared_mass() const { return e * e - momentum_squared(); }
};

// log f(t | t_parent, lambda) for the truncated exponential on [0, t_parent).
inline LogWeight log_splitting_density(double t, double t_parent, double lambda) {
  if (!(t_parent > 0) || !(lambda > 0)) {
    throw std::domain_error("log_splitting_density: t_parent and lambda must be > 0");
  }
  if (t < 0 || t >= t_parent) return kLogZero;
  // log(1 - e^{-lambda}) via expm1 keeps precision for small lambda.
  return -lambda * t / t_parent + std::log(lambda) - std::log(t_parent) -
         std::log(-std::expm1(-lambda));
}

class ConstantModel {
 public:
  explicit ConstantModel(int n) : n_(n) {}
  int leaf_count() const { return n_; }
  LogWeight log_psi(Cluster left, Cluster right) const {
    detail::require_disjoint(left, right);
    return 0.0;
  }

 private:
  int n_;
};

// Dasgupta cut cost in Gibbs form: log psi = -beta (|L| + |R|) sum_{i in L, j in R} w_ij.
class DasguptaModel {
 public:
  DasguptaModel(PairwiseWeights weights, double beta = 1.0)
      : w_(std::move(weights)), beta_(beta) {
    if (!(beta_ > 0)) throw std::invalid_argument("dasgupta: beta must be > 0");
    for (const auto& e : w_.triples()) {
      if (e.w < 0) throw std::invalid_argument("dasgupta: weights must be nonnegative");
    }
  }

  int leaf_count() const { return w_.size(); }
  const PairwiseWeights& weights() const { return w_; }
  double beta() const { return beta_; }

  double cut_weight(Cluster left, Cluster right) const {
    double s = 0.0;
    for (std::uint64_t a = left.bits(); a != 0; a &= a - 1) {
      const int i = std::countr_zero(a);
      for (std::uint64_t b = right.bits(); b != 0; b &= b - 1) {
        s += w_.at(i, std::countr_zero(b));
      }
    }
    return s;
  }

  // Dasgupta cost contribution of one split.
  double energy(Cluster left, Cluster right) const {
    detail::require_disjoint(left, right);
    if (right.bits() < left.bits()) std::swap(left, right);
    return (left.size() + right.size()) * cut_weight(left, right);
  }

  LogWeight log_psi(Cluster left, Cluster right) const { return -beta_ * energy(left, right); }

 private:
  PairwiseWeights w_;
  double beta_;
};

// Correlation clustering energy. Within-cluster sums run over ordered pairs
// i != j, so each unordered negative pair contributes twice.
class CorrelationModel {
 public:
  CorrelationModel(PairwiseWeights weights, double beta = 1.0)
      : w_(std::move(weights)), beta_(beta) {
    if (!(beta_ > 0)) throw std::invalid_argument("correlation: beta must be > 0");
    for (const auto& e : w_.triples()) {
      if (e.w < -1.0 || e.w > 1.0) {
        throw std::invalid_argument("correlation: weights must lie in [-1, 1]");
      }
    }
  }

  int leaf_count() const { return w_.size(); }
  const PairwiseWeights& weights() const { return w_; }
  double beta() const { return beta_; }

  double energy(Cluster left, Cluster right) const {
    detail::require_disjoint(left, right);
    if (right.bits() < left.bits()) std::swap(left, right);
    double cross = 0.0;
    for (std::uint64_t a = left.bits(); a != 0; a &= a - 1) {
      const int i = std::countr_zero(a);
      for (std::uint64_t b = right.bits(); b != 0; b &= b - 1) {
        const double w = w_.at(i, std::countr_zero(b));
        if (w > 0) cross += w;
      }
    }
    return cross - within_negative(left) - within_negative(right);
  }

  LogWeight log_psi(Cluster left, Cluster right) const { return -beta_ * energy(left, right); }

 private:
  double within_negative(Cluster c) const {
    double s = 0.0;
    for (std::uint64_t a = c.bits(); a != 0; a &= a - 1) {
      const int i = std::countr_zero(a);
      for (std::uint64_t b = c.bits(); b != 0; b &= b - 1) {
        const int j = std::countr_zero(b);
        if (i == j) continue;
        const double w = w_.at(i, j);
        if (w < 0) s += w;
      }
    }
    return s;
  }

  PairwiseWeights w_;
  double beta_;
};

// Toy jet-shower likelihood: psi(L, R) = f(t_L | t_P) f(t_R | t_P), where
// each cluster's four-vector is the sum of its leaves.
class GinkgoModel {
 public:
  GinkgoModel(std::vector<FourVector> leaves, double lambda)
      : leaves_(std::move(leaves)), lambda_(lambda) {
    if (leaves_.empty() || leaves_.size() > kMaxLeaves) {
      throw std::invalid_argument("ginkgo: leaf count must be in [1, 64]");
    }
    if (!(lambda_ > 0)) throw std::invalid_argument("ginkgo: lambda must be > 0");
  }

  int leaf_count() const { return static_cast<int>(leaves_.size()); }
  const std::vector<FourVector>& leaves() const { return leaves_; }
  double lambda() const { return lambda_; }

  FourVector momentum(Cluster c) const {
    FourVector v;
    for (std::uint64_t a = c.bits(); a != 0; a &= a - 1) v += leaves_[std::countr_zero(a)];
    return v;
  }

  LogWeight log_psi(Cluster left, Cluster right) const {
    detail::require_disjoint(left, right);
    const FourVector xl = momentum(left);
    const FourVector xr = momentum(right);
    const double tp = (xl + xr).squared_mass();
    if (!(tp > 0)) return kLogZero;
    const LogWeight a = log_splitting_density(xl.squared_mass(), tp, lambda_);
    if (a == kLogZero) return kLogZero;
    const LogWeight b = log_splitting_density(xr.squared_mass(), tp, lambda_);
    if (b == kLogZero) return kLogZero;
    return a + b;
  }

 private:
  std::vector<FourVector> leaves_;
  double lambda_;
};

enum class ModelKind { kConstant, kDasgupta, kCorrelation, kGinkgo };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kConstant: return "constant";
    case ModelKind::kDasgupta: return "dasgupta";
    case ModelKind::kCorrelation: return "correlation";
    case ModelKind::kGinkgo: return "ginkgo";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "constant") return ModelKind::kConstant;
  if (s == "dasgupta") return ModelKind::kDasgupta;
  if (s == "correlation") return ModelKind::kCorrelation;
  if (s == "ginkgo") return ModelKind::kGinkgo;
  throw std::invalid_argument("unknown model kind: " + std::string(s));
}

// Runtime-selected model. Hot loops should visit() once and run on the
// concrete type rather than dispatching per evaluation.
class AnyModel {
 public:
  using Variant = std::variant<ConstantModel, DasguptaModel, CorrelationModel, GinkgoModel>;

  template <class M>
    requires std::constructible_from<Variant, M>
  AnyModel(M m) : v_(std::move(m)) {}

  ModelKind kind() const { return static_cast<ModelKind>(v_.index()); }
  int leaf_count() const {
    return std::visit([](const auto& m) { return m.leaf_count(); }, v_);
  }
  LogWeight log_psi(Cluster l, Cluster r) const {
    return std::visit([&](const auto& m) { return m.log_psi(l, r); }, v_);
  }

  template <class Fn>
  decltype(auto) visit(Fn&& fn) const {
    return std::visit(std::forward<Fn>(fn), v_);
  }

  const Variant& variant() const { return v_; }

 private:
  Variant v_;
};

// log phi(H) = sum of log psi over every sibling pair of H.
template <PotentialModel Model>
LogWeight log_hierarchy_potential(const Hierarchy& h, const Model& model) {
  if (h.ground_size() != model.leaf_count()) {
    throw std::domain_error("log_hierarchy_potential: hierarchy and model disagree on n");
  }
  LogWeight total = 0.0;
  for (const Split& s : h.splits()) {
    const LogWeight v = model.log_psi(s.left, s.right);
    if (v == kLogZero) return kLogZero;
    total += v;
  }
  return total;
}

}  // namespace hct
