// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "dreval/analysis.hpp"
#include "dreval/evaluate.hpp"
#include "dreval/experiments.hpp"
#include "dreval/metrics.hpp"
#include "dreval/pipeline.hpp"
#include "dreval/ranking.hpp"
#include "test_util.hpp"

using namespace dreval;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Records the first few failures; pass stays false once any check fails.
struct Checker {
  Outcome out;
  int failures = 0;
  void check(bool ok, const std::string& what) {
    if (ok) return;
    out.pass = false;
    if (++failures <= 3) out.detail += (out.detail.empty() ? "" : "; ") + what;
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<int> random_labels(Index n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 2);
  std::vector<int> labels(static_cast<std::size_t>(n));
  do {
    for (auto& l : labels) l = pick(rng);
  } while (std::all_of(labels.begin(), labels.end(), [&](int l) { return l == labels[0]; }));
  return labels;
}

Projection as_projection(const std::string& id, const Eigen::Matrix<double, Eigen::Dynamic, 2>& coords) {
  Projection p;
  p.dataset_id = id;
  p.coords = coords;
  return p;
}

// 1. Identity projections are fixpoints and scores ignore rigid motions.
Outcome fixpoints() {
  Checker c;
  std::mt19937_64 rng(101);
  std::vector<MetricInstance> metrics = default_metric_grid();
  for (int k : {5, 10, 25}) metrics.push_back(MetricInstance::with_k(MetricFamily::label_trustworthiness, k));
  int checks = 0;
  for (int trial = 0; trial < 5; ++trial) {
    DatasetTable data;
    data.id = "plane";
    data.points = testutil::random_points(80, 2, rng);
    data.labels = random_labels(80, rng);
    const auto identity = as_projection("plane", data.points);
    const double theta = std::uniform_real_distribution<double>(0.0, 6.28)(rng);
    const auto moved = as_projection("plane", testutil::rigid_2d(data.points, theta, 3.0 * theta, -2.0));
    const auto other = as_projection("plane", testutil::random_points(80, 2, rng));
    const auto other_moved = as_projection("plane", testutil::rigid_2d(other.coords, -theta, 1.0, 7.0));
    for (const auto& m : metrics) {
      const double at_identity = evaluate_metric(m, data, identity);
      double target = std::numeric_limits<double>::quiet_NaN();
      switch (m.family()) {
        case MetricFamily::trustworthiness_continuity:
        case MetricFamily::label_trustworthiness:
          target = 1.0;
          break;
        case MetricFamily::mrre:
        case MetricFamily::stress:
        case MetricFamily::kl_divergence:
        case MetricFamily::neighbor_dissimilarity:
          target = 0.0;
          break;
        default:
          break;
      }
      if (!std::isnan(target)) c.check(std::abs(at_identity - target) <= 1e-9, m.id() + " identity " + fmt("%.3g", at_identity));
      const double at_moved = evaluate_metric(m, data, moved);
      c.check(std::abs(at_moved - at_identity) <= 1e-9, m.id() + " rigid identity");
      const double a = evaluate_metric(m, data, other), b = evaluate_metric(m, data, other_moved);
      c.check(std::abs(a - b) <= 1e-9, m.id() + " rigid random");
      checks += 3;
    }
  }
  if (c.out.pass) c.out.detail = std::to_string(checks) + " checks over " + std::to_string(metrics.size()) + " metrics";
  return c.out;
}

// 2. Every family against the naive implementations on small instances.
Outcome brute_force() {
  Checker c;
  std::mt19937_64 rng(202);
  int comparisons = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = std::uniform_int_distribution<Index>(5, 8)(rng);
    const Index d = std::uniform_int_distribution<Index>(2, 5)(rng);
    DatasetTable data;
    data.id = "tiny";
    data.points = testutil::random_points(n, d, rng);
    data.labels = random_labels(n, rng);
    const auto proj = as_projection("tiny", testutil::random_points(n, 2, rng));

    const auto od = oracle::distances(testutil::to_rows(data.points));
    const auto op = oracle::distances(testutil::to_rows(proj.coords));
    const auto rd = oracle::ranks(od), rp = oracle::ranks(op);
    const int k_any = std::uniform_int_distribution<int>(1, static_cast<int>(n) - 2)(rng);
    int k_tc = 1;
    while (k_tc + 1 <= n - 2 && 2 * n - 3 * (k_tc + 1) - 1 > 0) ++k_tc;
    k_tc = std::uniform_int_distribution<int>(1, k_tc)(rng);
    const double sigma = std::uniform_real_distribution<double>(0.2, 2.0)(rng);

    const std::vector<std::pair<MetricInstance, double>> cases{
        {MetricInstance::with_k(MetricFamily::trustworthiness_continuity, k_tc), oracle::trust_cont(rd, rp, k_tc)},
        {MetricInstance::with_k(MetricFamily::mrre, k_any), oracle::mrre(rd, rp, k_any)},
        {MetricInstance::with_k(MetricFamily::neighbor_dissimilarity, k_any),
         oracle::nd(oracle::snn(rd, k_any), oracle::snn(rp, k_any))},
        {MetricInstance::plain(MetricFamily::stress), oracle::stress(od, op)},
        {MetricInstance::with_sigma(MetricFamily::kl_divergence, sigma), oracle::kl(od, op, sigma)},
        {MetricInstance::plain(MetricFamily::distance_consistency), oracle::dsc(testutil::to_rows(proj.coords), data.labels)},
        {MetricInstance::plain(MetricFamily::silhouette), oracle::silhouette(op, data.labels)},
        {MetricInstance::with_k(MetricFamily::label_trustworthiness, k_any), oracle::label_trust(rd, rp, data.labels, k_any)},
    };
    for (const auto& [metric, expected] : cases) {
      const double got = evaluate_metric(metric, data, proj);
      worst = std::max(worst, std::abs(got - expected));
      c.check(std::abs(got - expected) <= 1e-9, metric.id() + " trial " + std::to_string(trial));
      ++comparisons;
    }
  }
  if (c.out.pass) c.out.detail = std::to_string(comparisons) + " comparisons, max |diff| " + fmt("%.2e", worst);
  return c.out;
}

// 3. Spearman's closed form on permutations and rank-then-Pearson on ties.
Outcome spearman() {
  Checker c;
  std::mt19937_64 rng(303);
  for (int t = 0; t < 100; ++t) {
    const int n = std::uniform_int_distribution<int>(3, 60)(rng);
    std::vector<double> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 1.0);
    auto q = p;
    std::shuffle(p.begin(), p.end(), rng);
    std::shuffle(q.begin(), q.end(), rng);
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) d2 += (p[i] - q[i]) * (p[i] - q[i]);
    const double closed = 1.0 - 6.0 * d2 / (double(n) * (double(n) * n - 1.0));
    const double got = spearman_rho(Eigen::Map<VectorXd>(p.data(), n), Eigen::Map<VectorXd>(q.data(), n)).rho;
    c.check(got == closed, "permutation " + std::to_string(t));
  }
  double worst = 0.0;
  int tied = 0;
  while (tied < 100) {
    const int n = std::uniform_int_distribution<int>(4, 40)(rng);
    std::uniform_int_distribution<int> small(0, 5);
    std::vector<double> a(static_cast<std::size_t>(n)), b(a.size());
    for (int i = 0; i < n; ++i) a[i] = small(rng), b[i] = small(rng);
    if (std::set<double>(a.begin(), a.end()).size() < 2 || std::set<double>(b.begin(), b.end()).size() < 2) continue;
    const double ref = oracle::pearson(oracle::frac_rank(a), oracle::frac_rank(b));
    const double got = spearman_rho(Eigen::Map<VectorXd>(a.data(), n), Eigen::Map<VectorXd>(b.data(), n)).rho;
    worst = std::max(worst, std::abs(got - ref));
    c.check(std::abs(got - ref) <= 1e-12, "tied " + std::to_string(tied));
    ++tied;
  }
  if (c.out.pass) c.out.detail = "100 permutations exact, 100 tied inputs max |diff| " + fmt("%.2e", worst);
  return c.out;
}

// 4. UPGMA merge sequences against a recomputing agglomeration.
Outcome upgma() {
  Checker c;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 8);
  int ties = 0;
  for (int t = 0; t < 100; ++t) {
    const Index m = std::uniform_int_distribution<Index>(2, 8)(rng);
    // Half the matrices use a coarse dyadic grid, which forces tied distances.
    const bool dyadic = t % 2 == 0;
    MatrixXd d = MatrixXd::Zero(m, m);
    std::set<double> seen;
    for (Index i = 0; i < m; ++i)
      for (Index j = i + 1; j < m; ++j) {
        d(i, j) = d(j, i) = dyadic ? grid(rng) / 8.0 : u(rng);
        ties += !seen.insert(d(i, j)).second;
      }
    std::vector<std::string> ids;
    for (Index i = 0; i < m; ++i) ids.push_back("m" + std::to_string(i));
    const auto dend = hier_cluster_distances(d, ids);
    const auto ref = oracle::upgma(testutil::to_rows(d));
    bool same = dend.merges.size() == ref.size();
    for (std::size_t i = 0; same && i < ref.size(); ++i) {
      const auto& a = dend.merges[i];
      same = a.left == ref[i].left && a.right == ref[i].right && a.height == ref[i].height && a.size == ref[i].size;
    }
    c.check(same, "matrix " + std::to_string(t) + (dyadic ? " (dyadic)" : ""));
  }
  if (c.out.pass) c.out.detail = "100 matrices identical, " + std::to_string(ties) + " tied entries exercised";
  return c.out;
}

// 5. The three diversity examples.
Outcome diversity_examples() {
  Checker c;
  const auto ones = SimilarityMatrix::from_values({"a", "b", "c"}, MatrixXd::Ones(3, 3));
  const auto r0 = diversity(std::vector<std::string>{"a", "b", "c"}, ones);
  c.check(r0.d_total == 0.0 && r0.d_norm == 0.0, "all-redundant set");
  for (const auto& [id, v] : r0.ind) c.check(v == 0.0, "Ind(" + id + ")");

  MatrixXd two(2, 2);
  two << 1.0, 0.2, 0.2, 1.0;
  const auto r2 = diversity(std::vector<std::string>{"a", "b"}, SimilarityMatrix::from_values({"a", "b"}, two));
  c.check(r2.ind.at("a") == 0.8 && r2.ind.at("b") == 0.8, "pair Ind");
  c.check(r2.d_total == 1.6 && r2.d_norm == 0.8, "pair D " + fmt("%.17g", r2.d_total));

  MatrixXd three(3, 3);
  three << 1.0, 0.9, 0.1, 0.9, 1.0, 0.2, 0.1, 0.2, 1.0;
  const auto r3 = diversity(std::vector<std::string>{"m1", "m2", "m3"}, SimilarityMatrix::from_values({"m1", "m2", "m3"}, three));
  // Ind(m1) = Ind(m2) = 1 - 0.9 and Ind(m3) = 1 - 0.2, evaluated in binary floating point.
  c.check(r3.ind.at("m1") == 1.0 - 0.9 && r3.ind.at("m2") == 1.0 - 0.9 && r3.ind.at("m3") == 0.8, "triple Ind");
  c.check(std::abs(r3.d_total - 1.0) <= 1e-15, "triple D " + fmt("%.17g", r3.d_total));
  c.check(std::abs(r3.d_norm - 1.0 / 3.0) <= 1e-15, "triple D_norm " + fmt("%.17g", r3.d_norm));
  if (c.out.pass)
    c.out.detail = "D=0; D=1.6, D_norm=0.8; D=" + fmt("%.17g", r3.d_total) + ", D_norm=" + fmt("%.17g", r3.d_norm);
  return c.out;
}

// 6. Kneedle on linear and planted-knee curves, and the knee + 1 rule.
Outcome kneedle() {
  Checker c;
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(4, 12)(rng);
    const double slope = 0.1 + 3.0 * u(rng), offset = u(rng) - 0.5;
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = 2.0 + double(i), ys[i] = offset + slope * xs[i];
    c.check(!kneedle_knee(xs, ys).has_value(), "linear curve " + std::to_string(t));
  }
  std::string recovered;
  for (int t = 0; t < 10; ++t) {
    // Steep rise up to the planted index, then a shallow tail: one curvature maximum.
    const std::size_t n = std::uniform_int_distribution<std::size_t>(7, 12)(rng);
    const std::size_t knee = std::uniform_int_distribution<std::size_t>(1, n - 3)(rng);
    const double steep = 0.5 + 2.0 * u(rng), shallow = 0.08 * u(rng) * steep;
    std::vector<DiversityPoint> curve;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = i <= knee ? steep * double(i) : steep * double(knee) + shallow * double(i - knee);
      const int k = 2 + static_cast<int>(i);
      curve.push_back({k, static_cast<std::size_t>(k), true, y, y / k});
      xs.push_back(k);
      ys.push_back(y);
    }
    const auto idx = kneedle_knee_index(xs, ys);
    c.check(idx == knee, "planted curve " + std::to_string(t));
    AnalysisOptions opt;
    opt.k_min = 2;
    opt.k_max = curve.back().k;
    const auto best = choose_optimal_k_from_curve(curve, opt);
    const int planted_k = 2 + static_cast<int>(knee);
    c.check(best.knee == planted_k && best.k == planted_k + 1 && !best.no_knee, "optimal k " + std::to_string(t));
    recovered += (recovered.empty() ? "" : ",") + std::to_string(planted_k) + "->" + std::to_string(best.k);
  }
  if (c.out.pass) c.out.detail = "10 linear without knee; knee->k " + recovered;
  return c.out;
}

// 7. cluster_based beats random on the desk configuration.
Outcome desk_stability() {
  Checker c;
  RunConfig config = load_config(fs::path(DREVAL_SOURCE_DIR) / "configs" / "desk.json");
  const auto scratch = testutil::scratch_dir("acceptance_desk");
  config.cache_dir = scratch / "cache";
  config.output_dir = scratch / "out";
  c.check(config.datasets.size() == 6 && config.ensemble.count == 50 && config.metrics.size() == 14 &&
              config.experiments.repeats == 50,
          "desk config shape");
  std::ostringstream log;
  const auto reports = cmd_stability(config, log);

  auto find = [&](StrategyKind s, int k) -> const StabilityReport* {
    for (const auto& r : reports)
      if (r.strategy == s && r.k == k) return &r;
    return nullptr;
  };
  std::string summary;
  for (int k = 5; k <= 10; ++k) {
    const auto* cl = find(StrategyKind::cluster_based, k);
    const auto* rn = find(StrategyKind::random, k);
    if (!cl || !rn) {
      c.check(false, "missing report at k=" + std::to_string(k));
      continue;
    }
    c.check(cl->stability > rn->stability,
            "k=" + std::to_string(k) + " cluster " + fmt("%.4f", cl->stability) + " <= random " + fmt("%.4f", rn->stability));
    if (k == 5 || k == 10)
      summary += "k=" + std::to_string(k) + " cluster " + fmt("%.3f", cl->stability) + " vs random " +
                 fmt("%.3f", rn->stability) + "; ";
  }
  if (const auto *cl = find(StrategyKind::cluster_based, 5), *rn = find(StrategyKind::random, 5); cl && rn) {
    const auto ci = bootstrap_difference(*cl, *rn, config.experiments.bootstrap, derive_seed(cl->seed, rn->seed));
    c.check(ci.low > 0.0 || ci.high < 0.0, "k=5 difference CI includes 0");
    summary += "k=5 difference 95% CI [" + fmt("%.3f", ci.low) + ", " + fmt("%.3f", ci.high) + "]";
  }
  if (c.out.pass) c.out.detail = summary;
  return c.out;
}

// 8. Planted redundancy: five true metrics, three noisy copies each.
Outcome planted_recommendation() {
  Checker c;
  std::string ks;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    ScoreTensor t;
    for (int g = 0; g < 5; ++g)
      for (int copy = 0; copy < 3; ++copy)
        t.metrics.push_back({"g" + std::to_string(g) + "_" + std::to_string(copy), Category::local, Orientation::higher_better});
    for (int d = 0; d < 6; ++d) {
      t.datasets.push_back("d" + std::to_string(d));
      MatrixXd s(50, 15);
      for (int g = 0; g < 5; ++g) {
        VectorXd truth(50);
        for (auto& v : truth) v = normal(rng);
        for (int copy = 0; copy < 3; ++copy)
          for (Index p = 0; p < 50; ++p) s(p, g * 3 + copy) = truth(p) + 0.1 * normal(rng);
      }
      t.scores.push_back(s);
    }
    const auto a = analyze_scores(t, AnalysisOptions{});
    const auto& rec = a.recommended;
    std::set<std::size_t> groups;
    for (auto r : rec.representatives) groups.insert(r / 3);
    const std::string tag = "seed " + std::to_string(seed);
    c.check(a.optimal.knee.has_value(), tag + " no knee");
    c.check(rec.effective_count() == 5, tag + " clusters " + std::to_string(rec.effective_count()));
    c.check(rec.representatives.size() == 5 && groups.size() == 5, tag + " representatives");
    ks += (ks.empty() ? "" : ",") + std::to_string(a.optimal.k);
  }
  if (c.out.pass) c.out.detail = "5 seeds, 5 clusters, one representative per group (k=" + ks + ")";
  return c.out;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), root).string()] = ss.str();
  }
  return files;
}

// 9. Every command reruns to byte-identical files.
Outcome reproducibility() {
  Checker c;
  const auto scratch = testutil::scratch_dir("acceptance_repro");
  const nlohmann::json j = {
      {"seed", 4242},
      {"datasets",
       {{{"synth", {{"id", "a"}, {"n", 60}, {"d", 6}, {"clusters", 3}, {"spread", 0.1}}}},
        {{"synth", {{"id", "b"}, {"n", 50}, {"d", 12}, {"clusters", 4}, {"spread", 0.2}}}}}},
      {"ensemble", {{"count", 12}}},
      {"metrics", "default"},
      {"experiments", {{"repeats", 5}, {"bootstrap", 200}}},
      {"cache_dir", ""}};
  std::size_t compared = 0;
  for (const std::string command : {"score", "analyze", "stability", "recommend"}) {
    std::map<std::string, std::string> first;
    for (int run = 0; run < 2; ++run) {
      RunConfig config = parse_config(j, scratch);
      config.output_dir = scratch / (command + "_" + std::to_string(run));
      config.threads = run + 1;
      std::ostringstream log;
      if (command == "score") cmd_score(config, log);
      else if (command == "analyze") cmd_analyze(config, log);
      else if (command == "stability") cmd_stability(config, log);
      else cmd_recommend(config, log);
      auto files = read_tree(config.output_dir);
      if (run == 0) {
        first = std::move(files);
        continue;
      }
      c.check(files.size() == first.size() && !files.empty(), command + " file set");
      for (const auto& [name, bytes] : first) {
        const auto it = files.find(name);
        c.check(it != files.end() && it->second == bytes, command + " " + name);
        ++compared;
      }
    }
  }
  if (c.out.pass) c.out.detail = std::to_string(compared) + " files identical across reruns";
  return c.out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric fixpoints and rigid invariance", fixpoints},
      {"brute-force metric equivalence", brute_force},
      {"Spearman correctness", spearman},
      {"UPGMA correctness", upgma},
      {"diversity formulas", diversity_examples},
      {"Kneedle and knee + 1", kneedle},
      {"cluster_based beats random (desk scale)", desk_stability},
      {"planted-redundancy recommendation", planted_recommendation},
      {"byte-identical reruns", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("%s %zu %s (%.2fs): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
