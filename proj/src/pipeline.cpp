#include "dreval/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "dreval/evaluate.hpp"
#include "dreval/io.hpp"
#include "dreval/score_cache.hpp"
#include "dreval/svg.hpp"

namespace dreval {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Stream tags for seeds derived from the master seed.
constexpr std::uint64_t kSynthStream = 1;
constexpr std::uint64_t kEnsembleStream = 2;
constexpr std::uint64_t kSweepStream = 3;

[[noreturn]] void config_fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) config_fail(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      config_fail(where, "unknown key '" + key + "'");
  }
}

template <class T>
T value_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_fail(where + "." + key, "wrong type");
  }
}

std::uint64_t seed_value(const json& j, const char* key, std::uint64_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    config_fail(where + "." + key, "seed must be a non-negative integer");
  return v.get<std::uint64_t>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

SynthSpec parse_synth(const json& j, const std::string& where, std::size_t index, bool& seed_explicit) {
  check_keys(j, {"id", "n", "d", "clusters", "spread", "seed"}, where);
  SynthSpec s;
  s.id = value_or<std::string>(j, "id", "synth_" + std::to_string(index), where);
  s.n = value_or<Index>(j, "n", s.n, where);
  s.d = value_or<Index>(j, "d", s.d, where);
  s.clusters = value_or<int>(j, "clusters", s.clusters, where);
  s.spread = value_or<double>(j, "spread", s.spread, where);
  seed_explicit = j.contains("seed");
  s.seed = seed_value(j, "seed", 0, where);
  if (s.n < 4) config_fail(where + ".n", "need at least 4 points");
  if (s.d < 2) config_fail(where + ".d", "need at least 2 dimensions");
  if (s.clusters < 1 || s.clusters > s.n) config_fail(where + ".clusters", "must lie in [1, n]");
  if (!(s.spread > 0.0)) config_fail(where + ".spread", "must be positive");
  return s;
}

GeneratorSpec parse_generator(const json& j, const std::string& where) {
  std::string kind_name;
  if (j.is_string()) {
    kind_name = j.get<std::string>();
  } else {
    check_keys(j, {"kind", "ranges"}, where);
    kind_name = value_or<std::string>(j, "kind", "", where);
  }
  const auto kind = generator_from_string(kind_name);
  if (!kind) config_fail(where, "unknown generator '" + kind_name + "'");
  GeneratorSpec spec = default_generator_spec(*kind);
  if (j.is_object() && j.contains("ranges")) {
    const auto& r = j.at("ranges");
    if (!r.is_object()) config_fail(where + ".ranges", "expected an object");
    for (const auto& [name, range] : r.items()) {
      if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number())
        config_fail(where + ".ranges." + name, "expected [low, high]");
      spec.ranges[name] = {range[0].get<double>(), range[1].get<double>()};
    }
  }
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    config_fail(where, e.what());
  }
  return spec;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Locations and thread count do not affect results and stay out of replay records.
json replay_config(const RunConfig& config) {
  json replay = config.to_json();
  for (const char* key : {"output_dir", "cache_dir", "threads"}) replay.erase(key);
  return replay;
}

/// Files of one command, written together once everything is computed.
class OutputSet {
 public:
  explicit OutputSet(fs::path root) : root_(std::move(root)) {}

  void add(const std::string& rel, std::string contents) { files_[rel] = std::move(contents); }
  void add_json(const std::string& rel, const json& j) { add(rel, j.dump(2) + "\n"); }

  void commit(const std::string& command, const RunConfig& config) {
    json outputs = json::array();
    for (const auto& [rel, contents] : files_) outputs.push_back({{"path", rel}, {"fnv1a", hex64(fnv1a(contents))}});
    json manifest = {{"command", command}, {"config", replay_config(config)}, {"outputs", outputs}};
    files_["manifest.json"] = manifest.dump(2) + "\n";
    for (const auto& [rel, contents] : files_) {
      const fs::path path = root_ / rel;
      fs::create_directories(path.parent_path());
      write_file_atomic(path, contents);
    }
  }

 private:
  fs::path root_;
  std::map<std::string, std::string> files_;
};

std::string scores_csv_text(const ScoreTensor& tensor) {
  std::string s = "dataset,projection,metric,value\n";
  for (std::size_t d = 0; d < tensor.dataset_count(); ++d)
    for (Index p = 0; p < tensor.projection_count(d); ++p)
      for (std::size_t m = 0; m < tensor.metric_count(); ++m)
        s += tensor.datasets[d] + "," + std::to_string(p) + "," + tensor.metrics[m].id + "," +
             format_double(tensor.at(d, p, m)) + "\n";
  return s;
}

std::string dataset_csv_text(const DatasetTable& data) {
  std::string s;
  for (Index c = 0; c < data.d(); ++c) s += "f" + std::to_string(c) + ",";
  s += "label\n";
  for (Index r = 0; r < data.n(); ++r) {
    for (Index c = 0; c < data.d(); ++c) s += format_double(data.points(r, c)) + ",";
    s += std::to_string(data.labels[static_cast<std::size_t>(r)]) + "\n";
  }
  return s;
}

void add_projection_set(OutputSet& out, const ProjectionSet& set) {
  const std::string dir = "projections/" + set.dataset_id + "/";
  json manifest = {{"dataset_id", set.dataset_id}, {"projections", json::array()}};
  for (const auto& p : set.projections) {
    std::string s = "x,y\n";
    for (Index r = 0; r < p.coords.rows(); ++r)
      s += format_double(p.coords(r, 0)) + "," + format_double(p.coords(r, 1)) + "\n";
    out.add(dir + "proj_" + std::to_string(p.index) + ".csv", std::move(s));
    json hyper = json::object();
    for (const auto& [k, v] : p.provenance.hyperparameters) hyper[k] = v;
    manifest["projections"].push_back(
        {{"index", p.index}, {"generator", p.provenance.generator}, {"hyperparameters", hyper},
         {"seed", p.provenance.seed}});
  }
  out.add_json(dir + "manifest.json", manifest);
}

std::string matrix_csv(const std::vector<std::string>& ids, const MatrixXd& values) {
  std::string s = "metric";
  for (const auto& id : ids) s += "," + id;
  s += "\n";
  for (Index i = 0; i < values.rows(); ++i) {
    s += ids[static_cast<std::size_t>(i)];
    for (Index j = 0; j < values.cols(); ++j) s += "," + format_double(values(i, j));
    s += "\n";
  }
  return s;
}

json clustering_json(const MetricClustering& c, const ScoreTensor& tensor) {
  json clusters = json::array();
  for (std::size_t i = 0; i < c.clusters.size(); ++i) {
    json members = json::array();
    for (std::size_t m : c.clusters[i]) members.push_back(c.metric_ids[m]);
    json cl = {{"members", members}};
    if (i < c.representatives.size()) {
      const std::size_t r = c.representatives[i];
      cl["representative"] = c.metric_ids[r];
      cl["category"] = to_string(tensor.metrics[r].category);
    }
    clusters.push_back(cl);
  }
  json removed = json::array();
  for (std::size_t m : c.singletons_removed) removed.push_back(c.metric_ids[m]);
  return {{"k_requested", c.k_requested},
          {"effective", c.effective_count()},
          {"clusters", clusters},
          {"singletons_removed", removed}};
}

ScoreTensor score_inputs(const RunConfig& config, const Inputs& inputs, std::size_t& computed, std::size_t& hits,
                         std::ostream& log) {
  std::optional<ScoreCache> cache;
  if (!config.cache_dir.empty())
    cache.emplace(config.cache_dir, [&log](const std::string& w) { log << "warning: " << w << "\n"; });
  EvaluateOptions opts;
  opts.cache = cache ? &*cache : nullptr;
  opts.threads = config.threads;
  auto result = evaluate_all(inputs.datasets, inputs.projections, config.metrics, opts);
  computed = result.computed;
  hits = result.cache_hits;
  return std::move(result.tensor);
}

void add_score_outputs(OutputSet& out, const RunConfig& config, const Inputs& inputs, const ScoreTensor& tensor) {
  for (std::size_t d = 0; d < inputs.datasets.size(); ++d) {
    if (config.datasets[d].synth) out.add("datasets/" + inputs.datasets[d].id + ".csv", dataset_csv_text(inputs.datasets[d]));
    add_projection_set(out, inputs.projections[d]);
  }
  out.add("scores.csv", scores_csv_text(tensor));
}

/// Matches the metric ids of stored scores against the configured catalog.
void check_tensor_matches(const ScoreTensor& tensor, const RunConfig& config) {
  std::vector<std::string> want;
  for (const auto& m : config.metrics) want.push_back(m.id());
  if (tensor.metric_ids() != want) throw DataError("scores.csv metrics do not match the configured metric list");
}

ScoreTensor scores_for(const RunConfig& config, const fs::path& path, OutputSet& out, std::ostream& log) {
  if (!path.empty()) {
    auto tensor = load_scores_csv(path);
    check_tensor_matches(tensor, config);
    log << "using scores from " << path.string() << "\n";
    return tensor;
  }
  const Inputs inputs = prepare_inputs(config);
  std::size_t computed = 0, hits = 0;
  auto tensor = score_inputs(config, inputs, computed, hits, log);
  add_score_outputs(out, config, inputs, tensor);
  return tensor;
}

AnalysisOptions clamp_range(AnalysisOptions options, std::size_t metric_count) {
  options.k_max = std::min(options.k_max, static_cast<int>(metric_count));
  return options;
}

void add_analysis_outputs(OutputSet& out, const ScoreTensor& tensor, const AnalysisResult& a,
                          const AnalysisOptions& options) {
  const auto& sim = a.similarity;
  out.add("similarity.csv", matrix_csv(sim.ids, sim.values));

  json per_dataset = json::array();
  for (std::size_t d = 0; d < sim.dataset_ids.size(); ++d) {
    json constant = json::array(), undefined = json::array();
    for (std::size_t m = 0; m < sim.ids.size(); ++m) {
      if (sim.constant[d][m]) constant.push_back(sim.ids[m]);
      if (sim.undefined[d][m]) undefined.push_back(sim.ids[m]);
    }
    per_dataset.push_back({{"dataset", sim.dataset_ids[d]}, {"constant", constant}, {"undefined", undefined}});
  }
  json values = json::array();
  for (Index i = 0; i < sim.values.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < sim.values.cols(); ++j) row.push_back(sim.values(i, j));
    values.push_back(row);
  }
  out.add_json("similarity.json", {{"ids", sim.ids}, {"values", values}, {"datasets", per_dataset}});

  json merges = json::array();
  for (const auto& m : a.dendrogram.merges)
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  const auto order = a.dendrogram.leaf_order();
  json order_ids = json::array();
  for (std::size_t i : order) order_ids.push_back(a.dendrogram.leaf_ids[i]);
  out.add_json("dendrogram.json", {{"leaf_ids", a.dendrogram.leaf_ids}, {"merges", merges}, {"leaf_order", order_ids}});
  out.add_json("heatmap_order.json", {{"order", order_ids}});

  for (const auto& c : a.clusterings)
    out.add_json("clusters_k" + std::to_string(c.k_requested) + ".json", clustering_json(c, tensor));

  std::string div = "k,effective,valid,D,D_norm\n";
  for (const auto& p : a.optimal.curve)
    div += std::to_string(p.k) + "," + std::to_string(p.effective) + "," + (p.valid ? "1" : "0") + "," +
           format_double(p.d_total) + "," + format_double(p.d_norm) + "\n";
  out.add("diversity.csv", div);

  json opt = {{"k", a.optimal.k > 0 ? json(a.optimal.k) : json(nullptr)},
              {"knee", a.optimal.knee ? json(*a.optimal.knee) : json(nullptr)},
              {"no_knee", a.optimal.no_knee},
              {"k_min", options.k_min},
              {"k_max", options.k_max},
              {"sensitivity", options.kneedle_sensitivity},
              {"elbow_curve", options.elbow == ElbowCurve::total ? "total" : "normalized"}};
  out.add_json("optimal_k.json", opt);

  MatrixXd ordered(static_cast<Index>(order.size()), static_cast<Index>(order.size()));
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < order.size(); ++i) {
    labels.push_back(sim.ids[order[i]]);
    for (std::size_t j = 0; j < order.size(); ++j)
      ordered(static_cast<Index>(i), static_cast<Index>(j)) = sim.values(static_cast<Index>(order[i]),
                                                                         static_cast<Index>(order[j]));
  }
  out.add("fig_heatmap.svg", svg::heatmap("Metric similarity (Spearman), dendrogram order", labels, ordered));

  svg::LineChart elbow{"Diversity of representatives", "number of clusters k", "diversity", {}, {}};
  svg::Series total{"D", {}, {}, {}, {}}, norm{"D_norm", {}, {}, {}, {}};
  for (const auto& p : a.optimal.curve)
    if (p.valid) {
      total.x.push_back(p.k);
      total.y.push_back(p.d_total);
      norm.x.push_back(p.k);
      norm.y.push_back(p.d_norm);
    }
  elbow.series.push_back(std::move(total));
  elbow.series.push_back(std::move(norm));
  if (a.optimal.k > 0) elbow.marker_x = a.optimal.k;
  out.add("fig_elbow.svg", svg::render(elbow));
}

json recommendation_json(const AnalysisResult& a, const ScoreTensor& tensor, const RunConfig& config) {
  json metrics = json::array();
  std::set<std::string> categories;
  for (std::size_t r : a.recommended.representatives) {
    const auto cat = to_string(tensor.metrics[r].category);
    categories.insert(cat);
    metrics.push_back({{"id", tensor.metrics[r].id}, {"category", cat}});
  }
  json div = nullptr;
  if (a.recommended.representatives.size() >= 2) {
    const auto rep = diversity(a.recommended.representatives, a.similarity);
    json ind = json::object();
    for (const auto& [id, v] : rep.ind) ind[id] = v;
    div = {{"ind", ind}, {"D", rep.d_total}, {"D_norm", rep.d_norm}};
  }
  return {{"k", a.optimal.k > 0 ? json(a.optimal.k) : json(nullptr)},
          {"knee", a.optimal.knee ? json(*a.optimal.knee) : json(nullptr)},
          {"no_knee", a.optimal.no_knee},
          {"metrics", metrics},
          {"categories_covered", json(std::vector<std::string>(categories.begin(), categories.end()))},
          {"covers_all_categories", categories.size() == 3},
          {"diversity", div},
          {"replay", replay_config(config)}};
}

}  // namespace

json RunConfig::to_json() const {
  json ds = json::array();
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const auto& src = datasets[i];
    json d = json::object();
    if (src.synth) {
      const auto& s = *src.synth;
      d["synth"] = {{"id", s.id}, {"n", s.n}, {"d", s.d}, {"clusters", s.clusters}, {"spread", s.spread},
                    {"seed", s.seed}};
    } else {
      d["path"] = src.path.string();
    }
    if (!src.projections.empty()) d["projections"] = src.projections.string();
    ds.push_back(d);
  }
  json gens = json::array();
  for (const auto& g : ensemble.generators) {
    json ranges = json::object();
    for (const auto& [name, r] : g.ranges) ranges[name] = {r.first, r.second};
    gens.push_back({{"kind", to_string(g.kind)}, {"ranges", ranges}});
  }
  json metric_ids = json::array();
  for (const auto& m : metrics) metric_ids.push_back(m.id());
  json strategies = json::array();
  for (auto s : experiments.strategies) strategies.push_back(to_string(s));
  return {{"seed", seed},
          {"threads", threads},
          {"datasets", ds},
          {"ensemble", {{"count", ensemble.count}, {"generators", gens}}},
          {"metrics", metric_ids},
          {"analysis",
           {{"k_min", analysis.k_min},
            {"k_max", analysis.k_max},
            {"sensitivity", analysis.kneedle_sensitivity},
            {"singletons", analysis.singletons == SingletonPolicy::drop ? "drop" : "keep"},
            {"elbow_curve", analysis.elbow == ElbowCurve::total ? "total" : "normalized"}}},
          {"experiments",
           {{"k_min", experiments.k_min},
            {"k_max", experiments.k_max},
            {"repeats", experiments.repeats},
            {"strategies", strategies},
            {"aggregation", to_string(experiments.aggregation)},
            {"bootstrap", experiments.bootstrap}}},
          {"cache_dir", cache_dir.string()},
          {"output_dir", output_dir.string()}};
}

void RunConfig::set_seed(std::uint64_t value) {
  for (std::size_t i = 0; i < datasets.size(); ++i)
    if (datasets[i].synth && !datasets[i].synth_seed_explicit)
      datasets[i].synth->seed = derive_seed(value, kSynthStream, i);
  seed = value;
  experiments.seed = derive_seed(value, kSweepStream);
}

RunConfig parse_config(const json& j, const fs::path& base_dir) {
  check_keys(j, {"seed", "threads", "datasets", "ensemble", "metrics", "analysis", "experiments", "cache_dir",
                 "output_dir"},
             "root");
  RunConfig c;
  if (!j.contains("seed")) config_fail("root", "seed is required");
  c.seed = seed_value(j, "seed", 0, "root");
  c.threads = value_or<int>(j, "threads", 1, "root");
  if (c.threads < 1) config_fail("threads", "must be >= 1");

  if (!j.contains("datasets") || !j.at("datasets").is_array() || j.at("datasets").empty())
    config_fail("datasets", "expected a non-empty array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.at("datasets").size(); ++i) {
    const std::string where = "datasets[" + std::to_string(i) + "]";
    const auto& dj = j.at("datasets")[i];
    check_keys(dj, {"path", "synth", "projections"}, where);
    DatasetSource src;
    if (dj.contains("path") == dj.contains("synth")) config_fail(where, "exactly one of 'path' or 'synth' required");
    std::string id;
    if (dj.contains("path")) {
      src.path = resolve(base_dir, value_or<std::string>(dj, "path", "", where));
      if (!fs::is_regular_file(src.path)) config_fail(where + ".path", "no such file '" + src.path.string() + "'");
      id = src.path.stem().string();
    } else {
      src.synth = parse_synth(dj.at("synth"), where + ".synth", i, src.synth_seed_explicit);
      id = src.synth->id;
    }
    if (dj.contains("projections")) {
      src.projections = resolve(base_dir, value_or<std::string>(dj, "projections", "", where));
      if (!fs::is_directory(src.projections))
        config_fail(where + ".projections", "no such directory '" + src.projections.string() + "'");
    }
    if (!ids.insert(id).second) config_fail(where, "duplicate dataset id '" + id + "'");
    c.datasets.push_back(std::move(src));
  }

  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    check_keys(e, {"count", "generators"}, "ensemble");
    c.ensemble.count = value_or<Index>(e, "count", c.ensemble.count, "ensemble");
    if (c.ensemble.count < 2) config_fail("ensemble.count", "need at least 2 projections");
    if (e.contains("generators")) {
      const auto& g = e.at("generators");
      if (!g.is_array() || g.empty()) config_fail("ensemble.generators", "expected a non-empty array");
      c.ensemble.generators.clear();
      for (std::size_t i = 0; i < g.size(); ++i)
        c.ensemble.generators.push_back(parse_generator(g[i], "ensemble.generators[" + std::to_string(i) + "]"));
    }
  }

  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    if (m.is_string() && m.get<std::string>() == "default") {
      c.metrics = default_metric_grid();
    } else {
      if (!m.is_array() || m.empty()) config_fail("metrics", "expected \"default\" or a non-empty array of ids");
      c.metrics.clear();
      std::set<std::string> seen;
      for (const auto& id : m) {
        if (!id.is_string()) config_fail("metrics", "metric ids must be strings");
        try {
          c.metrics.push_back(MetricInstance::parse(id.get<std::string>()));
        } catch (const std::exception& e) {
          config_fail("metrics", e.what());
        }
        if (!seen.insert(c.metrics.back().id()).second) config_fail("metrics", "duplicate metric '" + c.metrics.back().id() + "'");
      }
    }
  }

  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    check_keys(a, {"k_min", "k_max", "sensitivity", "singletons", "elbow_curve"}, "analysis");
    c.analysis.k_min = value_or<int>(a, "k_min", c.analysis.k_min, "analysis");
    c.analysis.k_max = value_or<int>(a, "k_max", c.analysis.k_max, "analysis");
    c.analysis.kneedle_sensitivity = value_or<double>(a, "sensitivity", c.analysis.kneedle_sensitivity, "analysis");
    const auto policy = value_or<std::string>(a, "singletons", "drop", "analysis");
    if (policy == "drop")
      c.analysis.singletons = SingletonPolicy::drop;
    else if (policy == "keep")
      c.analysis.singletons = SingletonPolicy::keep;
    else
      config_fail("analysis.singletons", "expected 'drop' or 'keep'");
    const auto curve = value_or<std::string>(a, "elbow_curve", "total", "analysis");
    if (curve == "total")
      c.analysis.elbow = ElbowCurve::total;
    else if (curve == "normalized")
      c.analysis.elbow = ElbowCurve::normalized;
    else
      config_fail("analysis.elbow_curve", "expected 'total' or 'normalized'");
  }
  if (c.analysis.k_min < 2 || c.analysis.k_min > c.analysis.k_max) config_fail("analysis", "need 2 <= k_min <= k_max");
  if (!(c.analysis.kneedle_sensitivity >= 0.0)) config_fail("analysis.sensitivity", "must be >= 0");

  if (j.contains("experiments")) {
    const auto& x = j.at("experiments");
    check_keys(x, {"k_min", "k_max", "repeats", "strategies", "aggregation", "bootstrap"}, "experiments");
    c.experiments.k_min = value_or<int>(x, "k_min", c.experiments.k_min, "experiments");
    c.experiments.k_max = value_or<int>(x, "k_max", c.experiments.k_max, "experiments");
    c.experiments.repeats = value_or<int>(x, "repeats", c.experiments.repeats, "experiments");
    c.experiments.bootstrap = value_or<int>(x, "bootstrap", c.experiments.bootstrap, "experiments");
    try {
      if (x.contains("strategies")) {
        const auto names = value_or<std::vector<std::string>>(x, "strategies", {}, "experiments");
        if (names.empty()) config_fail("experiments.strategies", "expected a non-empty array");
        c.experiments.strategies.clear();
        for (const auto& n : names) c.experiments.strategies.push_back(strategy_from_string(n));
      }
      if (x.contains("aggregation"))
        c.experiments.aggregation = aggregation_from_string(value_or<std::string>(x, "aggregation", "", "experiments"));
    } catch (const InvalidArgument& e) {
      config_fail("experiments", e.what());
    }
  }
  if (c.experiments.repeats < 2 || c.experiments.repeats > 200)
    config_fail("experiments.repeats", "must lie in [2, 200]");
  if (c.experiments.bootstrap < 1) config_fail("experiments.bootstrap", "must be >= 1");
  if (c.experiments.k_min < 1 || c.experiments.k_min > c.experiments.k_max)
    config_fail("experiments", "need 1 <= k_min <= k_max");

  if (const auto cache = value_or<std::string>(j, "cache_dir", "", "root"); !cache.empty())
    c.cache_dir = resolve(base_dir, cache);
  if (j.contains("output_dir")) c.output_dir = resolve(base_dir, value_or<std::string>(j, "output_dir", "", "root"));
  else c.output_dir = base_dir / "out";

  c.experiments.threads = c.threads;
  c.set_seed(c.seed);
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("config: cannot read '" + path.string() + "': " + e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

Inputs prepare_inputs(const RunConfig& config) {
  Inputs in;
  for (std::size_t i = 0; i < config.datasets.size(); ++i) {
    const auto& src = config.datasets[i];
    in.datasets.push_back(src.synth ? synth_dataset(*src.synth) : load_dataset(src.path));
    const auto& data = in.datasets.back();
    if (!src.projections.empty()) {
      auto set = load_projection_set(src.projections, data.n());
      if (set.dataset_id != data.id)
        throw DataError("projections in '" + src.projections.string() + "' belong to dataset '" + set.dataset_id +
                        "', not '" + data.id + "'");
      in.projections.push_back(std::move(set));
    } else {
      in.projections.push_back(generate_projections(data, config.ensemble.count, config.ensemble.generators,
                                                    derive_seed(config.seed, kEnsembleStream, i), config.threads));
    }
  }
  return in;
}

AnalysisResult analyze_scores(const ScoreTensor& tensor, const AnalysisOptions& options) {
  AnalysisResult a;
  a.similarity = metric_similarity_matrix(tensor);
  a.dendrogram = hier_cluster(a.similarity);
  const AnalysisOptions range = clamp_range(options, tensor.metric_count());
  if (range.k_min > range.k_max) return a;  // catalog smaller than the smallest k
  for (int k = range.k_min; k <= range.k_max; ++k) {
    try {
      a.clusterings.push_back(cluster_metrics(a.dendrogram, a.similarity, k, range.singletons));
    } catch (const InvalidArgument&) {
      // Every cluster at this k is a singleton; the diversity curve marks it invalid.
    }
  }
  auto curve = diversity_curve(a.dendrogram, a.similarity, range);
  if (std::any_of(curve.begin(), curve.end(), [](const DiversityPoint& p) { return p.valid; })) {
    a.optimal = choose_optimal_k_from_curve(std::move(curve), range);
    a.recommended = cluster_metrics(a.dendrogram, a.similarity, a.optimal.k, range.singletons);
  } else {
    a.optimal.curve = std::move(curve);
    a.optimal.no_knee = true;
  }
  return a;
}

ScoreTensor cmd_score(const RunConfig& config, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const Inputs inputs = prepare_inputs(config);
  std::size_t computed = 0, hits = 0;
  auto tensor = score_inputs(config, inputs, computed, hits, log);
  OutputSet out(config.output_dir);
  add_score_outputs(out, config, inputs, tensor);
  out.commit("score", config);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::size_t projections = 0;
  for (const auto& p : inputs.projections) projections += p.size();
  log << "scored " << tensor.dataset_count() << " datasets x " << projections << " projections x "
      << tensor.metric_count() << " metrics (" << computed << " computed, " << hits << " cached) in " << secs
      << " s\n";
  return tensor;
}

AnalysisResult cmd_analyze(const RunConfig& config, std::ostream& log, const fs::path& scores) {
  OutputSet out(config.output_dir);
  const auto tensor = scores_for(config, scores, out, log);
  auto a = analyze_scores(tensor, config.analysis);
  add_analysis_outputs(out, tensor, a, clamp_range(config.analysis, tensor.metric_count()));
  out.commit("analyze", config);
  log << "analyzed " << tensor.metric_count() << " metrics; optimal k = " << a.optimal.k
      << (a.optimal.no_knee ? " (no knee)" : "") << "\n";
  return a;
}

std::vector<StabilityReport> cmd_stability(const RunConfig& config, std::ostream& log, const fs::path& scores) {
  OutputSet out(config.output_dir);
  const auto tensor = scores_for(config, scores, out, log);
  if (static_cast<std::size_t>(config.experiments.k_max) > tensor.metric_count())
    config_fail("experiments.k_max", "exceeds the number of metrics (" + std::to_string(tensor.metric_count()) + ")");
  const auto sim = metric_similarity_matrix(tensor);
  const auto dend = hier_cluster(sim);
  const auto reports = stability_sweep(tensor, dend, config.experiments);

  std::string csv = "strategy,k,stability,ci_low,ci_high,repeats,seed\n";
  for (const auto& r : reports)
    csv += to_string(r.strategy) + "," + std::to_string(r.k) + "," + format_double(r.stability) + "," +
           format_double(r.ci_low) + "," + format_double(r.ci_high) + "," + std::to_string(r.repeats) + "," +
           std::to_string(r.seed) + "\n";
  out.add("stability.csv", csv);

  // Paired comparison of each strategy against random, where both are present.
  std::string diff = "strategy,k,difference,ci_low,ci_high\n";
  bool any_diff = false;
  for (const auto& r : reports) {
    if (r.strategy == StrategyKind::random) continue;
    const auto base = std::find_if(reports.begin(), reports.end(), [&](const StabilityReport& b) {
      return b.strategy == StrategyKind::random && b.k == r.k;
    });
    if (base == reports.end()) continue;
    const Interval ci = bootstrap_difference(r, *base, config.experiments.bootstrap,
                                             derive_seed(r.seed, base->seed));
    diff += to_string(r.strategy) + "_minus_random," + std::to_string(r.k) + "," +
            format_double(r.stability - base->stability) + "," + format_double(ci.low) + "," +
            format_double(ci.high) + "\n";
    any_diff = true;
  }
  if (any_diff) out.add("stability_difference.csv", diff);

  svg::LineChart chart{"Rank stability by metric selection strategy", "number of metrics k", "rank stability", {}, {}};
  for (auto kind : config.experiments.strategies) {
    svg::Series s{to_string(kind), {}, {}, {}, {}};
    for (const auto& r : reports)
      if (r.strategy == kind) {
        s.x.push_back(r.k);
        s.y.push_back(r.stability);
        s.low.push_back(r.ci_low);
        s.high.push_back(r.ci_high);
      }
    chart.series.push_back(std::move(s));
  }
  out.add("fig_rank.svg", svg::render(chart));
  out.commit("stability", config);
  log << "stability sweep: " << reports.size() << " cells (" << config.experiments.repeats << " repeats)\n";
  return reports;
}

AnalysisResult cmd_recommend(const RunConfig& config, std::ostream& log, const fs::path& scores) {
  OutputSet out(config.output_dir);
  const auto tensor = scores_for(config, scores, out, log);
  auto a = analyze_scores(tensor, config.analysis);
  add_analysis_outputs(out, tensor, a, clamp_range(config.analysis, tensor.metric_count()));
  out.add_json("recommendation.json", recommendation_json(a, tensor, config));
  out.commit("recommend", config);
  log << "recommended " << a.recommended.representatives.size() << " metrics at k = " << a.optimal.k << ":";
  for (const auto& id : a.recommended.representative_ids()) log << " " << id;
  log << "\n";
  return a;
}

}  // namespace dreval
