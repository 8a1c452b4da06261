#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hct/cluster.hpp"
#include "hct/ginkgo.hpp"
#include "hct/hierarchy.hpp"
#include "hct/models.hpp"
#include "hct/sparse_trellis.hpp"

namespace hct::io {

using Json = nlohmann::json;

// Malformed or inconsistent input file.
class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes through a temporary file and renames it into place.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
  }
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(what + ": " + e.what());
  }
}

// FNV-1a, used to fingerprint dataset files in result records.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t parse_bits(const Json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw FormatError("bad cluster bits: " + s);
    }
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      throw FormatError("bad cluster bits: " + s);
    }
    if (pos != s.size()) throw FormatError("bad cluster bits: " + s);
    return v;
  }
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  throw FormatError("cluster bits must be an integer string");
}

// ---------------------------------------------------------------- datasets

enum class Schema { kPairwise, kFourVectors };

struct Dataset {
  Schema schema = Schema::kPairwise;
  int n = 0;
  std::optional<PairwiseWeights> weights;
  std::vector<FourVector> leaves;
  std::vector<std::string> labels;
};

inline FourVector four_vector_from_json(const Json& j) {
  try {
    return {j.at("E").get<double>(), j.at("px").get<double>(), j.at("py").get<double>(),
            j.at("pz").get<double>()};
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad four-vector: ") + e.what());
  }
}

inline Json to_json(const FourVector& v) {
  return Json{{"E", v.e}, {"px", v.px}, {"py", v.py}, {"pz", v.pz}};
}

inline Dataset dataset_from_json(const Json& j) {
  Dataset d;
  try {
    const std::string schema = j.at("schema").get<std::string>();
    if (schema == "pairwise") {
      d.schema = Schema::kPairwise;
      d.n = j.at("n").get<int>();
      if (d.n < 1 || d.n > kMaxLeaves) throw FormatError("pairwise dataset: n out of range");
      std::vector<PairwiseWeights::Entry> entries;
      for (const Json& e : j.at("weights")) {
        if (!e.is_array() || e.size() != 3) throw FormatError("weights entries are [i, j, w]");
        entries.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
      }
      try {
        d.weights = PairwiseWeights::from_triples(d.n, entries);
      } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
      }
    } else if (schema == "fourvectors") {
      d.schema = Schema::kFourVectors;
      for (const Json& v : j.at("leaves")) d.leaves.push_back(four_vector_from_json(v));
      d.n = static_cast<int>(d.leaves.size());
      if (d.n < 1 || d.n > kMaxLeaves) throw FormatError("fourvectors dataset: bad leaf count");
    } else {
      throw FormatError("unknown dataset schema: " + schema);
    }
    if (j.contains("labels")) {
      d.labels = j.at("labels").get<std::vector<std::string>>();
      if (static_cast<int>(d.labels.size()) != d.n) throw FormatError("labels length != n");
      try {
        GroundSet check(d.labels);
      } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
      }
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad dataset: ") + e.what());
  }
  return d;
}

inline Json to_json(const Dataset& d) {
  Json j;
  if (d.schema == Schema::kPairwise) {
    j["schema"] = "pairwise";
    j["n"] = d.n;
    Json w = Json::array();
    for (const auto& e : d.weights->triples()) {
      if (e.w != 0.0) w.push_back(Json::array({e.i, e.j, e.w}));
    }
    j["weights"] = w;
  } else {
    j["schema"] = "fourvectors";
    Json leaves = Json::array();
    for (const auto& v : d.leaves) leaves.push_back(to_json(v));
    j["leaves"] = leaves;
  }
  if (!d.labels.empty()) j["labels"] = d.labels;
  return j;
}

inline Dataset load_dataset(const std::string& path) {
  return dataset_from_json(parse_json(read_file(path), path));
}

// Builds the model a dataset supports; pairwise data feeds dasgupta,
// correlation or constant, four-vectors feed ginkgo or constant.
inline AnyModel make_model(const Dataset& d, ModelKind kind, const ModelParams& params) {
  params.validate();
  switch (kind) {
    case ModelKind::kConstant:
      return ConstantModel(d.n);
    case ModelKind::kDasgupta:
    case ModelKind::kCorrelation:
      if (d.schema != Schema::kPairwise) {
        throw FormatError("model " + std::string(to_string(kind)) + " needs a pairwise dataset");
      }
      try {
        if (kind == ModelKind::kDasgupta) return DasguptaModel(*d.weights, params.beta);
        return CorrelationModel(*d.weights, params.beta);
      } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
      }
    case ModelKind::kGinkgo:
      if (d.schema != Schema::kFourVectors) {
        throw FormatError("model ginkgo needs a fourvectors dataset");
      }
      return GinkgoModel(d.leaves, params.lambda);
  }
  throw FormatError("unknown model");
}

// --------------------------------------------------------------- tree files

// Node order: the root's leaves by index, then internal nodes by
// (size, bits); the root is last. parent[k] indexes that list, root = -1.
inline std::vector<Cluster> tree_node_order(const Hierarchy& h) {
  std::vector<Cluster> nodes;
  for (int leaf : h.root().leaves()) nodes.push_back(Cluster::singleton(leaf));
  std::vector<Cluster> internal;
  for (const Split& s : h.splits()) internal.push_back(s.parent);
  std::sort(internal.begin(), internal.end(), [](Cluster a, Cluster b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  nodes.insert(nodes.end(), internal.begin(), internal.end());
  return nodes;
}

inline Json tree_to_json(const Hierarchy& h) {
  const std::vector<Cluster> nodes = tree_node_order(h);
  std::map<Cluster, int> index;
  for (std::size_t k = 0; k < nodes.size(); ++k) index[nodes[k]] = static_cast<int>(k);
  std::vector<int> parent(nodes.size(), -1);
  for (const Split& s : h.splits()) {
    parent[index[s.left]] = index[s.parent];
    parent[index[s.right]] = index[s.parent];
  }
  Json bits = Json::array();
  for (Cluster c : nodes) bits.push_back(c.to_string());
  return Json{{"n", h.ground_size()}, {"parent", parent}, {"bits", bits}};
}

// Adds per-node log psi (internal nodes; null for leaves) and the total.
template <PotentialModel Model>
Json tree_to_json(const Hierarchy& h, const Model& model) {
  Json j = tree_to_json(h);
  Json psi = Json::array();
  for (Cluster c : tree_node_order(h)) {
    if (c.is_singleton()) {
      psi.push_back(nullptr);
      continue;
    }
    const Split s = *h.split_of(c);
    const LogWeight v = model.log_psi(s.left, s.right);
    psi.push_back(v == kLogZero ? Json("-inf") : Json(v));
  }
  j["log_psi"] = psi;
  const LogWeight total = log_hierarchy_potential(h, model);
  j["log_phi"] = total == kLogZero ? Json("-inf") : Json(total);
  return j;
}

inline Hierarchy tree_from_json(const Json& j) {
  try {
    const int n = j.at("n").get<int>();
    const auto parent = j.at("parent").get<std::vector<int>>();
    const Json& bits = j.at("bits");
    if (n < 1 || n > kMaxLeaves) throw FormatError("tree file: n out of range");
    if (bits.size() != parent.size()) throw FormatError("tree file: parent/bits length mismatch");
    std::vector<Cluster> nodes;
    for (const Json& b : bits) nodes.emplace_back(parse_bits(b));
    Hierarchy h;
    try {
      h = Hierarchy::from_nodes(n, nodes);
    } catch (const std::domain_error& e) {
      throw FormatError(std::string("tree file: ") + e.what());
    }
    // The parent array must agree with the node sets.
    int roots = 0;
    for (std::size_t k = 0; k < parent.size(); ++k) {
      if (parent[k] == -1) {
        ++roots;
        if (nodes[k] != h.root()) throw FormatError("tree file: root is not the largest node");
        continue;
      }
      if (parent[k] < 0 || parent[k] >= static_cast<int>(nodes.size())) {
        throw FormatError("tree file: parent index out of range");
      }
      const auto s = h.split_of(nodes[parent[k]]);
      if (!s || (s->left != nodes[k] && s->right != nodes[k])) {
        throw FormatError("tree file: parent array disagrees with cluster bits");
      }
    }
    if (roots != 1) throw FormatError("tree file: need exactly one root");
    return h;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad tree file: ") + e.what());
  }
}

// ------------------------------------------------------------ sparse trellis

inline Json sparse_trellis_to_json(const SparseTrellis& st) {
  Json vertices = Json::array();
  for (const auto& [c, pairs] : st.vertices()) {
    Json p = Json::array();
    for (const auto& [l, r] : pairs) p.push_back(Json::array({l.to_string(), r.to_string()}));
    vertices.push_back(Json{{"bits", c.to_string()}, {"pairs", p}});
  }
  return Json{{"n", st.leaf_count()},
              {"ordering",
               {{"mode", std::string(to_string(st.ordering().mode))},
                {"seed", std::to_string(st.ordering().seed)}}},
              {"vertices", vertices}};
}

inline SparseTrellis sparse_trellis_from_json(const Json& j) {
  try {
    const int n = j.at("n").get<int>();
    LeafOrdering ordering;
    ordering.mode = parse_ordering_mode(j.at("ordering").at("mode").get<std::string>());
    ordering.seed = parse_bits(j.at("ordering").at("seed"));
    SparseTrellis::VertexMap v;
    for (const Json& vertex : j.at("vertices")) {
      auto& pairs = v[Cluster(parse_bits(vertex.at("bits")))];
      for (const Json& p : vertex.at("pairs")) {
        pairs.emplace_back(Cluster(parse_bits(p.at(0))), Cluster(parse_bits(p.at(1))));
      }
    }
    try {
      return SparseTrellis::from_vertices(n, ordering, v);
    } catch (const std::domain_error& e) {
      throw FormatError(std::string("sparse trellis file: ") + e.what());
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad sparse trellis file: ") + e.what());
  }
}

// ---------------------------------------------------------------- jet files

// A jet file is a fourvectors dataset plus its generating tree and settings.
inline Json jet_to_json(const ginkgo::GeneratedJet& jet) {
  Dataset d;
  d.schema = Schema::kFourVectors;
  d.n = jet.leaf_count();
  d.leaves = jet.leaves;
  Json j = to_json(d);
  j["tree"] = tree_to_json(jet.tree);
  j["lambda"] = jet.lambda;
  j["t_cut"] = jet.t_cut;
  j["seed"] = std::to_string(jet.seed);
  j["truth_log_likelihood"] = jet.truth_log_likelihood;
  return j;
}

struct JetFile {
  Dataset dataset;
  std::optional<Hierarchy> truth_tree;
  std::optional<double> truth_log_likelihood;
  std::optional<double> lambda;
  std::optional<double> t_cut;
};

inline JetFile jet_from_json(const Json& j) {
  JetFile f;
  f.dataset = dataset_from_json(j);
  if (j.contains("tree")) f.truth_tree = tree_from_json(j.at("tree"));
  if (j.contains("truth_log_likelihood")) {
    f.truth_log_likelihood = j.at("truth_log_likelihood").get<double>();
  }
  if (j.contains("lambda")) f.lambda = j.at("lambda").get<double>();
  if (j.contains("t_cut")) f.t_cut = j.at("t_cut").get<double>();
  return f;
}

// ----------------------------------------------------------- result records

struct ResultRecord {
  std::string command;
  std::string dataset_hash;
  std::string model;
  ModelParams params;
  std::optional<LogWeight> log_z;
  std::optional<LogWeight> log_map;
  double wall_time_s = 0.0;
  std::uint64_t op_count = 0;
  std::uint64_t seed = 0;

  Json to_json() const {
    auto num = [](const std::optional<LogWeight>& v) -> Json {
      if (!v) return nullptr;
      if (*v == kLogZero) return "-inf";
      return *v;
    };
    return Json{{"command", command},
                {"dataset_hash", dataset_hash},
                {"model", {{"kind", model},
                           {"beta", params.beta},
                           {"lambda", params.lambda},
                           {"t_cut", params.t_cut}}},
                {"log_z", num(log_z)},
                {"log_map", num(log_map)},
                {"wall_time_s", wall_time_s},
                {"op_count", op_count},
                {"seed", seed}};
  }
};

inline void append_record(const std::string& path, const ResultRecord& r) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path);
  out << r.to_json().dump() << '\n';
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xF];
  return s;
}

}  // namespace hct::io
