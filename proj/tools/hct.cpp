#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hct/hct.hpp"
#include "hct/io.hpp"

namespace fs = std::filesystem;
using namespace hct;
using io::Json;

namespace {

struct Common {
  std::string model = "dasgupta";
  double beta = 1.0;
  std::optional<double> lambda;
  double t_cut = 100.0;
  std::uint64_t seed = 0;
  std::string out = ".";
};

struct Loaded {
  std::string path;
  io::Dataset dataset;
  std::string hash;
  std::optional<double> file_lambda;
};

Loaded load(const std::string& path) {
  Loaded l;
  l.path = path;
  const std::string text = io::read_file(path);
  l.hash = io::hex64(io::fnv1a(text));
  const io::JetFile f = io::jet_from_json(io::parse_json(text, path));
  l.dataset = f.dataset;
  l.file_lambda = f.lambda;
  return l;
}

ModelParams params_for(const Common& c, const Loaded* l) {
  ModelParams p;
  p.beta = c.beta;
  p.t_cut = c.t_cut;
  if (c.lambda) {
    p.lambda = *c.lambda;
  } else if (l != nullptr && l->file_lambda) {
    p.lambda = *l->file_lambda;
  }
  p.validate();
  return p;
}

AnyModel model_for(const Common& c, const Loaded& l) {
  const ModelKind kind = parse_model_kind(c.model);
  if (l.dataset.n > kDenseLeafCap) {
    throw std::domain_error("dataset has " + std::to_string(l.dataset.n) +
                            " leaves; the dense trellis supports at most " +
                            std::to_string(kDenseLeafCap));
  }
  return io::make_model(l.dataset, kind, params_for(c, &l));
}

// Files named on the command line; directories contribute their *.json
// files (minus the manifest) in name order.
std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  for (const std::string& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<std::string> files;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.path().extension() == ".json" && e.path().filename() != "manifest.json") {
          files.push_back(e.path().string());
        }
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(in);
    }
  }
  if (out.empty()) throw std::invalid_argument("no input datasets");
  return out;
}

std::string out_path(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  return (fs::path(c.out) / name).string();
}

void emit(const Common& c, const io::ResultRecord& r) {
  io::append_record(out_path(c, "results.jsonl"), r);
  std::cout << r.to_json().dump() << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

io::ResultRecord base_record(const std::string& command, const Common& c, const Loaded& l) {
  io::ResultRecord r;
  r.command = command;
  r.dataset_hash = l.hash;
  r.model = c.model;
  r.params = params_for(c, &l);
  r.seed = c.seed;
  return r;
}

// ------------------------------------------------------------ z / map

int cmd_z(const Common& c, const std::string& path) {
  const Loaded l = load(path);
  const AnyModel model = model_for(c, l);
  io::ResultRecord r = base_record("z", c, l);
  model.visit([&](const auto& m) {
    using M = std::decay_t<decltype(m)>;
    const auto t0 = std::chrono::steady_clock::now();
    DenseTrellis<M> t(m);
    r.log_z = t.compute_partition_function();
    r.wall_time_s = seconds_since(t0);
    r.op_count = t.operation_count();
  });
  emit(c, r);
  return 0;
}

int cmd_map(const Common& c, const std::string& path, bool compare_greedy) {
  const Loaded l = load(path);
  const AnyModel model = model_for(c, l);
  io::ResultRecord r = base_record("map", c, l);
  Json tree;
  Json extra;
  model.visit([&](const auto& m) {
    using M = std::decay_t<decltype(m)>;
    const auto t0 = std::chrono::steady_clock::now();
    DenseTrellis<M> t(m);
    const MapResult map = t.compute_map();
    r.wall_time_s = seconds_since(t0);
    r.log_z = t.compute_partition_function();
    r.log_map = map.log_value;
    r.op_count = t.operation_count();
    tree = io::tree_to_json(map.tree, m);
    tree["degenerate"] = map.degenerate;
    if (compare_greedy) {
      const BaselineResult g = greedy_cluster(m);
      extra["greedy_log_phi"] = fmt(g.log_phi);
      extra["map_log_phi"] = fmt(map.log_value);
      if constexpr (std::is_same_v<M, DasguptaModel>) {
        extra["greedy_cost"] = log_hierarchy_potential(g.tree, m) / -m.beta();
        extra["map_cost"] = map.log_value / -m.beta();
      }
    }
  });
  io::write_file_atomic(out_path(c, "map_tree.json"), tree.dump(2) + "\n");
  emit(c, r);
  if (!extra.is_null()) std::cout << extra.dump() << '\n';
  return 0;
}

// ------------------------------------------------------------ marginal

int cmd_marginal(const Common& c, const std::string& path, const std::vector<int>& cluster,
                 const std::string& fragment_path) {
  const Loaded l = load(path);
  const AnyModel model = model_for(c, l);
  if (cluster.empty() == fragment_path.empty()) {
    throw std::invalid_argument("marginal: pass exactly one of --cluster or --fragment");
  }
  io::ResultRecord r = base_record("marginal", c, l);
  LogWeight value = kLogZero;
  std::string what;
  model.visit([&](const auto& m) {
    using M = std::decay_t<decltype(m)>;
    const auto t0 = std::chrono::steady_clock::now();
    DenseTrellis<M> t(m);
    r.log_z = t.compute_partition_function();
    if (!cluster.empty()) {
      for (int leaf : cluster) {
        if (leaf < 0 || leaf >= l.dataset.n) {
          throw std::invalid_argument("marginal: leaf index " + std::to_string(leaf) +
                                      " out of range");
        }
      }
      const Cluster x = cluster_of(cluster);
      value = t.marginal_cluster(x);
      what = "cluster:" + x.to_string();
    } else {
      const Hierarchy frag = io::tree_from_json(
          io::parse_json(io::read_file(fragment_path), fragment_path));
      value = t.marginal_subhierarchy(frag);
      what = "fragment:" + frag.signature();
    }
    r.wall_time_s = seconds_since(t0);
    r.op_count = t.operation_count();
  });
  emit(c, r);
  std::cout << Json{{"target", what}, {"log_marginal", fmt(value)},
                    {"marginal", value == kLogZero ? 0.0 : std::exp(value)}}
                   .dump()
            << '\n';
  return 0;
}

// ------------------------------------------------------------ sample

int cmd_sample(const Common& c, const std::string& path, int num_samples, int tree_files) {
  if (num_samples < 1) throw std::invalid_argument("sample: --num-samples must be >= 1");
  const Loaded l = load(path);
  const AnyModel model = model_for(c, l);
  io::ResultRecord r = base_record("sample", c, l);
  model.visit([&](const auto& m) {
    using M = std::decay_t<decltype(m)>;
    const auto t0 = std::chrono::steady_clock::now();
    DenseTrellis<M> t(m);
    r.log_z = t.compute_partition_function();
    auto sampler = t.sampler(c.seed);
    std::map<std::string, std::pair<long, Hierarchy>> freq;
    for (int i = 0; i < num_samples; ++i) {
      Hierarchy h = sampler.next();
      if (i < tree_files) {
        char name[32];
        std::snprintf(name, sizeof name, "sample_%05d.json", i);
        io::write_file_atomic(out_path(c, name), io::tree_to_json(h, m).dump(2) + "\n");
      }
      auto [it, fresh] = freq.try_emplace(h.signature(), 0, h);
      ++it->second.first;
    }
    r.wall_time_s = seconds_since(t0);
    r.op_count = t.operation_count();

    std::vector<std::pair<std::string, std::pair<long, Hierarchy>>> rows(freq.begin(), freq.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.second.first > b.second.first;
    });
    std::ostringstream csv;
    csv << "signature,count,frequency,posterior\n";
    double seen_mass = 0.0;
    double tv = 0.0;
    for (const auto& [sig, entry] : rows) {
      const double freq_v = static_cast<double>(entry.first) / num_samples;
      const double post = std::exp(t.log_posterior(entry.second));
      seen_mass += post;
      tv += std::abs(freq_v - post);
      csv << '"' << sig << "\"," << entry.first << ',' << fmt(freq_v) << ',' << fmt(post) << '\n';
    }
    tv = 0.5 * (tv + std::max(0.0, 1.0 - seen_mass));
    io::write_file_atomic(out_path(c, "sample_frequencies.csv"), csv.str());
    std::cerr << "distinct trees: " << rows.size() << ", total variation to posterior: " << tv
              << '\n';
  });
  emit(c, r);
  return 0;
}

// ------------------------------------------------------------ generate

int cmd_generate(const Common& c, int count, int min_leaves, int max_leaves, double root_mass,
                 double root_pz) {
  if (count < 1) throw std::invalid_argument("generate: --count must be >= 1");
  ginkgo::JetConfig cfg;
  cfg.lambda = c.lambda.value_or(1.5);
  cfg.t_cut = c.t_cut;
  cfg.seed = c.seed;
  cfg.root = FourVector{std::sqrt(root_pz * root_pz + root_mass * root_mass), 0.0, 0.0, root_pz};
  if (min_leaves > 0 || max_leaves > 0) {
    cfg.leaf_count_filter =
        ginkgo::LeafRange{std::max(1, min_leaves), max_leaves > 0 ? max_leaves : kMaxLeaves};
  }
  cfg.validate();
  Json files = Json::array();
  for (int i = 0; i < count; ++i) {
    ginkgo::JetConfig one = cfg;
    one.seed = ginkgo::jet_seed(cfg.seed, static_cast<std::uint64_t>(i));
    const ginkgo::GeneratedJet jet = ginkgo::generate_jet(one);
    char name[32];
    std::snprintf(name, sizeof name, "jet_%05d.json", i);
    io::write_file_atomic(out_path(c, name), io::jet_to_json(jet).dump(2) + "\n");
    files.push_back(
        Json{{"file", name}, {"seed", std::to_string(one.seed)}, {"leaves", jet.leaf_count()}});
  }
  const Json manifest{{"count", count},
                      {"seed", std::to_string(cfg.seed)},
                      {"lambda", cfg.lambda},
                      {"t_cut", cfg.t_cut},
                      {"root", io::to_json(cfg.root)},
                      {"files", files}};
  io::write_file_atomic(out_path(c, "manifest.json"), manifest.dump(2) + "\n");
  std::cout << Json{{"command", "generate"}, {"count", count}, {"out", c.out}}.dump() << '\n';
  return 0;
}

// ------------------------------------------------------------ baselines

struct Stats {
  std::vector<double> v;
  void add(double x) {
    if (std::isfinite(x)) v.push_back(x);
  }
  double mean() const {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
  }
  double stddev() const {
    if (v.size() < 2) return v.empty() ? std::nan("") : 0.0;
    const double m = mean();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  }
};

int cmd_baselines(const Common& c, const std::vector<std::string>& inputs, int width,
                  int lookahead) {
  const auto files = expand_inputs(inputs);
  std::ostringstream csv;
  csv << "index,file,n,trellis,beam,greedy,trellis_minus_beam,trellis_minus_greedy,"
         "beam_minus_greedy\n";
  Stats tb;
  Stats tg;
  Stats bg;
  int violations = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const Loaded l = load(files[i]);
    const AnyModel model = model_for(c, l);
    model.visit([&](const auto& m) {
      using M = std::decay_t<decltype(m)>;
      DenseTrellis<M> t(m);
      const LogWeight best = t.compute_map().log_value;
      const LogWeight beam = beam_search_cluster(m, BeamConfig{width, lookahead, 1e-12}).log_phi;
      const LogWeight greedy = greedy_cluster(m).log_phi;
      if (beam > best + 1e-9 || greedy > best + 1e-9) ++violations;
      tb.add(best - beam);
      tg.add(best - greedy);
      bg.add(beam - greedy);
      csv << i << ',' << fs::path(files[i]).filename().string() << ',' << l.dataset.n << ','
          << fmt(best) << ',' << fmt(beam) << ',' << fmt(greedy) << ',' << fmt(best - beam) << ','
          << fmt(best - greedy) << ',' << fmt(beam - greedy) << '\n';
    });
  }
  io::write_file_atomic(out_path(c, "baselines.csv"), csv.str());
  std::ostringstream summary;
  summary << "comparison,mean,std,instances\n";
  summary << "trellis_minus_beam," << fmt(tb.mean()) << ',' << fmt(tb.stddev()) << ','
          << tb.v.size() << '\n';
  summary << "trellis_minus_greedy," << fmt(tg.mean()) << ',' << fmt(tg.stddev()) << ','
          << tg.v.size() << '\n';
  summary << "beam_minus_greedy," << fmt(bg.mean()) << ',' << fmt(bg.stddev()) << ','
          << bg.v.size() << '\n';
  io::write_file_atomic(out_path(c, "baselines_summary.csv"), summary.str());
  std::cout << summary.str();
  if (violations > 0) {
    std::cerr << violations << " instance(s) where a baseline beat the exact MAP\n";
    return 1;
  }
  return 0;
}

// ------------------------------------------------------------ sparse

struct SparseOptions {
  std::string builder = "sim";
  std::vector<int> num_seed_trees{1};
  std::string ordering = "norm_ascending";
  std::uint64_t ordering_seed = 0;
  int leaf_count = 9;
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::string trellis_file;
  std::string load_trellis;
};

std::vector<FourVector> jet_leaves(const Loaded& l) {
  if (l.dataset.schema != io::Schema::kFourVectors) {
    throw io::FormatError("sparse: datasets must be fourvectors jet files (" + l.path + ")");
  }
  return l.dataset.leaves;
}

int cmd_sparse(const Common& c, const SparseOptions& o) {
  const LeafOrdering ordering{parse_ordering_mode(o.ordering), o.ordering_seed};
  const double lambda = c.lambda.value_or(1.5);

  std::vector<std::vector<FourVector>> train;
  if (o.load_trellis.empty() && o.builder == "bs") {
    for (const auto& f : expand_inputs(o.train)) train.push_back(jet_leaves(load(f)));
  }
  std::vector<Loaded> tests;
  if (!o.test.empty()) {
    for (const auto& f : expand_inputs(o.test)) tests.push_back(load(f));
  }

  std::ostringstream sweep;
  sweep << "num_seed_trees,vertices,edges,realizable,sparsity,mean_sparse_map,mean_greedy,"
           "mean_beam,mean_full_map,relative_map\n";
  std::ostringstream rows;
  rows << "num_seed_trees,index,file,n,sparse_map,greedy,beam,full_map\n";

  std::vector<int> sweep_values = o.num_seed_trees;
  if (!o.load_trellis.empty()) sweep_values = {0};
  for (int k : sweep_values) {
    std::optional<SparseTrellis> st;
    if (!o.load_trellis.empty()) {
      st = io::sparse_trellis_from_json(
          io::parse_json(io::read_file(o.load_trellis), o.load_trellis));
    } else if (o.builder == "sim") {
      ginkgo::JetConfig cfg;
      cfg.lambda = lambda;
      cfg.t_cut = c.t_cut;
      cfg.seed = c.seed;
      st = build_simulator_trellis(cfg, o.leaf_count, k, ordering);
    } else if (o.builder == "bs") {
      if (k < 1 || static_cast<std::size_t>(k) > train.size()) {
        throw std::invalid_argument("sparse: --num-seed-trees " + std::to_string(k) +
                                    " exceeds the " + std::to_string(train.size()) +
                                    " training datasets");
      }
      st = build_beam_search_trellis(std::span(train).first(static_cast<std::size_t>(k)), lambda,
                                     BeamConfig{}, ordering);
    } else {
      throw std::invalid_argument("sparse: --builder must be sim or bs");
    }
    if (!o.trellis_file.empty()) {
      std::string target = o.trellis_file;
      if (sweep_values.size() > 1) target += "." + std::to_string(k);
      if (fs::path(target).has_parent_path()) fs::create_directories(fs::path(target).parent_path());
      io::write_file_atomic(target, io::sparse_trellis_to_json(*st).dump() + "\n");
    }

    Stats sparse_map;
    Stats greedy;
    Stats beam;
    Stats full;
    for (std::size_t i = 0; i < tests.size(); ++i) {
      const std::vector<FourVector> leaves = ordering.arrange_dataset(jet_leaves(tests[i]));
      if (static_cast<int>(leaves.size()) != st->leaf_count()) {
        throw std::invalid_argument("sparse: test dataset " + tests[i].path + " has " +
                                    std::to_string(leaves.size()) + " leaves, trellis has " +
                                    std::to_string(st->leaf_count()));
      }
      const GinkgoModel m(leaves, c.lambda.value_or(tests[i].file_lambda.value_or(1.5)));
      const LogWeight s = SparseEvaluator<GinkgoModel>(*st, m).map().log_value;
      const LogWeight g = greedy_cluster(m).log_phi;
      const LogWeight b = beam_search_cluster(m).log_phi;
      const LogWeight f = DenseTrellis<GinkgoModel>(m).compute_map().log_value;
      sparse_map.add(s);
      greedy.add(g);
      beam.add(b);
      full.add(f);
      rows << k << ',' << i << ',' << fs::path(tests[i].path).filename().string() << ','
           << leaves.size() << ',' << fmt(s) << ',' << fmt(g) << ',' << fmt(b) << ',' << fmt(f)
           << '\n';
    }
    sweep << k << ',' << st->vertex_count() << ',' << st->edge_count() << ','
          << st->count_hierarchies() << ',' << fmt(st->sparsity_value()) << ','
          << fmt(sparse_map.mean()) << ',' << fmt(greedy.mean()) << ',' << fmt(beam.mean()) << ','
          << fmt(full.mean()) << ',' << fmt(sparse_map.mean() - greedy.mean()) << '\n';
  }
  io::write_file_atomic(out_path(c, "sparse_sweep.csv"), sweep.str());
  if (!tests.empty()) io::write_file_atomic(out_path(c, "sparse_eval.csv"), rows.str());
  std::cout << sweep.str();
  return 0;
}

// ------------------------------------------------------------ bench

AnyModel bench_instance(const Common& c, int n) {
  const ModelKind kind = parse_model_kind(c.model);
  std::mt19937_64 rng(ginkgo::jet_seed(c.seed, static_cast<std::uint64_t>(n)));
  const auto weights = [&](double lo, double hi) {
    PairwiseWeights w(n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) w.set(i, j, lo + (hi - lo) * uniform_unit(rng));
    }
    return w;
  };
  switch (kind) {
    case ModelKind::kConstant:
      return ConstantModel(n);
    case ModelKind::kDasgupta:
      return DasguptaModel(weights(0.0, 1.0), c.beta);
    case ModelKind::kCorrelation:
      return CorrelationModel(weights(-1.0, 1.0), c.beta);
    case ModelKind::kGinkgo: {
      ginkgo::JetConfig cfg;
      cfg.lambda = c.lambda.value_or(1.5);
      cfg.t_cut = c.t_cut;
      cfg.seed = rng();
      cfg.leaf_count_filter = ginkgo::LeafRange{n, n};
      return ginkgo::generate_jet(cfg).model();
    }
  }
  throw std::invalid_argument("bench: unknown model");
}

int cmd_bench(const Common& c, int n_min, int n_max) {
  if (n_min < 1 || n_max > kDenseLeafCap || n_min > n_max) {
    throw std::invalid_argument("bench: need 1 <= n-min <= n-max <= " +
                                std::to_string(kDenseLeafCap));
  }
  std::ostringstream csv;
  csv << "n,ops,closed_form,hierarchies,ops_per_hierarchy,z_seconds,map_seconds,ops_ratio\n";
  double prev_ops = 0.0;
  bool mismatch = false;
  for (int n = n_min; n <= n_max; ++n) {
    const AnyModel model = bench_instance(c, n);
    model.visit([&](const auto& m) {
      using M = std::decay_t<decltype(m)>;
      auto t0 = std::chrono::steady_clock::now();
      DenseTrellis<M> z(m);
      z.compute_partition_function();
      const double z_s = seconds_since(t0);
      t0 = std::chrono::steady_clock::now();
      DenseTrellis<M> mp(m);
      mp.compute_map();
      const double map_s = seconds_since(t0);
      const std::uint64_t ops = z.operation_count();
      const std::uint64_t closed = full_trellis_split_terms(n);
      if (ops != closed) mismatch = true;
      const BigUint trees = hierarchy_count(n);
      const double per_tree = static_cast<double>(ops) / trees.convert_to<double>();
      csv << n << ',' << ops << ',' << closed << ',' << trees << ',' << fmt(per_tree) << ','
          << fmt(z_s) << ',' << fmt(map_s) << ','
          << (prev_ops > 0 ? fmt(static_cast<double>(ops) / prev_ops) : std::string("")) << '\n';
      prev_ops = static_cast<double>(ops);
    });
  }
  io::write_file_atomic(out_path(c, "bench.csv"), csv.str());
  std::cout << csv.str();
  if (mismatch) {
    std::cerr << "operation count disagrees with the closed form\n";
    return 1;
  }
  return 0;
}

// ------------------------------------------------------------ count

int cmd_count(int n, const std::string& trellis_path) {
  Json j;
  if (!trellis_path.empty()) {
    const SparseTrellis st =
        io::sparse_trellis_from_json(io::parse_json(io::read_file(trellis_path), trellis_path));
    n = st.leaf_count();
    const BigRational s = st.sparsity_index();
    j["realizable"] = st.count_hierarchies().str();
    j["vertices"] = st.vertex_count();
    j["sparsity"] = numerator(s).str() + "/" + denominator(s).str();
    j["sparsity_value"] = st.sparsity_value();
  }
  if (n < 1 || n > kMaxLeaves) throw std::invalid_argument("count: n must be in [1, 64]");
  j["n"] = n;
  j["hierarchies"] = hierarchy_count(n).str();
  j["full_trellis_split_terms"] = full_trellis_split_terms(n);
  if (n <= kDenseLeafCap) {
    j["dense_trellis_count"] = DenseTrellis<ConstantModel>(ConstantModel(n)).count_hierarchies().str();
  }
  std::cout << j.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact inference over hierarchical clusterings with cluster trellises"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML file with default option values");

  Common c;
  app.add_option("--model", c.model, "Energy model")
      ->check(CLI::IsMember({"dasgupta", "correlation", "ginkgo", "constant"}))
      ->capture_default_str();
  app.add_option("--beta", c.beta, "Inverse temperature")->capture_default_str();
  app.add_option("--lambda", c.lambda, "Ginkgo decay rate (default: jet file value, else 1.5)");
  app.add_option("--tcut", c.t_cut, "Ginkgo squared-mass cutoff")->capture_default_str();
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--out", c.out, "Output directory")->capture_default_str();

  std::string dataset;
  auto* z = app.add_subcommand("z", "Partition function");
  z->add_option("dataset", dataset)->required();

  bool compare_greedy = false;
  auto* map = app.add_subcommand("map", "MAP hierarchy");
  map->add_option("dataset", dataset)->required();
  map->add_flag("--compare-greedy", compare_greedy, "Also report the greedy tree");

  std::vector<int> cluster;
  std::string fragment;
  auto* marginal = app.add_subcommand("marginal", "Cluster or sub-hierarchy marginal");
  marginal->add_option("dataset", dataset)->required();
  marginal->add_option("--cluster", cluster, "Leaf indices")->delimiter(',');
  marginal->add_option("--fragment", fragment, "Tree file holding a sub-hierarchy");

  int num_samples = 1000;
  int tree_files = 10;
  auto* sample = app.add_subcommand("sample", "Exact posterior samples");
  sample->add_option("dataset", dataset)->required();
  sample->add_option("--num-samples", num_samples)->capture_default_str();
  sample->add_option("--tree-files", tree_files, "Samples also written as tree files")
      ->capture_default_str();

  int count = 1;
  int min_leaves = 0;
  int max_leaves = 0;
  double root_mass = 80.0;
  double root_pz = 400.0;
  auto* generate = app.add_subcommand("generate", "Generate Ginkgo jets");
  generate->add_option("--count", count)->capture_default_str();
  generate->add_option("--min-leaves", min_leaves);
  generate->add_option("--max-leaves", max_leaves);
  generate->add_option("--root-mass", root_mass)->capture_default_str();
  generate->add_option("--root-pz", root_pz)->capture_default_str();

  std::vector<std::string> inputs;
  int width = 0;
  int lookahead = 1;
  auto* baselines = app.add_subcommand("baselines", "Greedy and beam search against the MAP");
  baselines->add_option("inputs", inputs, "Dataset files or directories")->required();
  baselines->add_option("--beam-width", width, "0 means N(N-1)/2")->capture_default_str();
  baselines->add_option("--lookahead", lookahead)->capture_default_str();

  SparseOptions so;
  auto* sparse = app.add_subcommand("sparse", "Build and evaluate sparse trellises");
  sparse->add_option("--builder", so.builder)
      ->check(CLI::IsMember({"sim", "bs"}))
      ->capture_default_str();
  sparse->add_option("--num-seed-trees", so.num_seed_trees, "One or more values (sweep)")
      ->delimiter(',');
  sparse->add_option("--ordering", so.ordering)
      ->check(CLI::IsMember({"standard", "random", "norm_ascending"}))
      ->capture_default_str();
  sparse->add_option("--ordering-seed", so.ordering_seed);
  sparse->add_option("--leaf-count", so.leaf_count, "Leaves per simulator seed tree")
      ->capture_default_str();
  sparse->add_option("--train", so.train, "Training jets for the bs builder");
  sparse->add_option("--test", so.test, "Test jets to evaluate");
  sparse->add_option("--trellis-file", so.trellis_file, "Write the built trellis here");
  sparse->add_option("--load-trellis", so.load_trellis, "Evaluate a saved trellis");

  int n_min = 2;
  int n_max = 12;
  auto* bench = app.add_subcommand("bench", "Timing and operation counts");
  bench->add_option("--n-min", n_min)->capture_default_str();
  bench->add_option("--n-max", n_max)->capture_default_str();

  int count_n = 0;
  std::string trellis_path;
  auto* countc = app.add_subcommand("count", "Hierarchy counts");
  countc->add_option("--n", count_n);
  countc->add_option("--trellis", trellis_path, "Sparse trellis file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*z) return cmd_z(c, dataset);
    if (*map) return cmd_map(c, dataset, compare_greedy);
    if (*marginal) return cmd_marginal(c, dataset, cluster, fragment);
    if (*sample) return cmd_sample(c, dataset, num_samples, tree_files);
    if (*generate) return cmd_generate(c, count, min_leaves, max_leaves, root_mass, root_pz);
    if (*baselines) return cmd_baselines(c, inputs, width, lookahead);
    if (*sparse) return cmd_sparse(c, so);
    if (*bench) return cmd_bench(c, n_min, n_max);
    if (*countc) return cmd_count(count_n, trellis_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
