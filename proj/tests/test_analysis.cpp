#include <doctest.h>

#include "dreval/analysis.hpp"
#include "test_util.hpp"

using namespace dreval;

namespace {

MatrixXd sym3(double ab, double ac, double bc, double diag) {
  MatrixXd m(3, 3);
  m << diag, ab, ac, ab, diag, bc, ac, bc, diag;
  return m;
}

MatrixXd random_distances(Index m, std::mt19937_64& rng, bool dyadic) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 16);
  MatrixXd d = MatrixXd::Zero(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j) d(i, j) = d(j, i) = dyadic ? grid(rng) / 16.0 : u(rng);
  return d;
}

std::vector<std::string> letters(Index m) {
  std::vector<std::string> ids;
  for (Index i = 0; i < m; ++i) ids.push_back(std::string(1, static_cast<char>('a' + i)));
  return ids;
}

ScoreTensor tensor_from_columns(const std::vector<std::vector<std::vector<double>>>& per_dataset, Index metrics) {
  ScoreTensor t;
  for (Index m = 0; m < metrics; ++m) t.metrics.push_back({"m" + std::to_string(m), Category::local, Orientation::higher_better});
  for (std::size_t d = 0; d < per_dataset.size(); ++d) {
    t.datasets.push_back("d" + std::to_string(d));
    const auto& cols = per_dataset[d];
    MatrixXd s(static_cast<Index>(cols[0].size()), metrics);
    for (Index m = 0; m < metrics; ++m)
      for (Index p = 0; p < s.rows(); ++p) s(p, m) = cols[static_cast<std::size_t>(m)][static_cast<std::size_t>(p)];
    t.scores.push_back(s);
  }
  return t;
}

}  // namespace

TEST_CASE("similarity matrix") {
  // Metric 1 is an increasing affine map of metric 0.
  const auto t = tensor_from_columns({{{1, 4, 2, 3, 5}, {3, 9, 5, 7, 11}, {2, 3, 4, 1, 5}}}, 3);
  const auto s = metric_similarity_matrix(t);
  CHECK(s.values(0, 1) == 1.0);
  CHECK(s.values.diagonal() == VectorXd::Ones(3));
  CHECK(s.values == s.values.transpose());
  CHECK(s.values == s.per_dataset[0]);

  // rho = 0.8 on one dataset and 0.4 on the other.
  const auto two = tensor_from_columns({{{1, 2, 3, 4, 5}, {2, 1, 4, 3, 5}}, {{1, 2, 3, 4, 5}, {2, 3, 4, 1, 5}}}, 2);
  const auto s2 = metric_similarity_matrix(two);
  CHECK(s2.per_dataset[0](0, 1) == doctest::Approx(0.8));
  CHECK(s2.per_dataset[1](0, 1) == doctest::Approx(0.4));
  CHECK(s2.values(0, 1) == doctest::Approx(0.6).epsilon(1e-15));

  // Lower-better orientation reverses the ranking.
  auto flipped = two;
  flipped.metrics[1].orientation = Orientation::lower_better;
  CHECK(metric_similarity_matrix(flipped).values(0, 1) == doctest::Approx(-0.6));

  const auto flat = tensor_from_columns({{{1, 2, 3, 4}, {7, 7, 7, 7}}}, 2);
  const auto sf = metric_similarity_matrix(flat);
  CHECK(sf.values(0, 1) == 0.0);
  CHECK(sf.constant[0][1]);
}

TEST_CASE("UPGMA hand example and zero-height merge") {
  const auto d = sym3(0.1, 0.9, 0.8, 0.0);
  const auto dend = hier_cluster_distances(d, {"A", "B", "C"});
  REQUIRE(dend.merges.size() == 2);
  CHECK(dend.merges[0].left == 0);
  CHECK(dend.merges[0].right == 1);
  CHECK(dend.merges[0].height == doctest::Approx(0.1));
  CHECK(dend.merges[1].left == 2);
  CHECK(dend.merges[1].right == 3);
  CHECK(dend.merges[1].height == doctest::Approx(0.85));
  CHECK(dend.merges[1].size == 3);

  const auto sim = SimilarityMatrix::from_values({"x", "y", "z"}, sym3(0.2, 1.0, 0.2, 1.0));
  const auto d2 = hier_cluster(sim);
  CHECK(d2.merges[0].left == 0);
  CHECK(d2.merges[0].right == 2);
  CHECK(d2.merges[0].height == 0.0);
}

TEST_CASE("UPGMA matches brute-force recomputation") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 200; ++t) {
    const bool dyadic = t % 2 == 0;
    const Index m = std::uniform_int_distribution<Index>(2, 8)(rng);
    const MatrixXd d = random_distances(m, rng, dyadic);
    const auto dend = hier_cluster_distances(d, letters(m));
    const auto ref = oracle::upgma(testutil::to_rows(d));
    REQUIRE(dend.merges.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(dend.merges[i].left == ref[i].left);
      CHECK(dend.merges[i].right == ref[i].right);
      CHECK(dend.merges[i].size == ref[i].size);
      CHECK(dend.merges[i].height == ref[i].height);
    }
    auto order = dend.leaf_order();
    std::sort(order.begin(), order.end());
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == i);
  }
}

TEST_CASE("cutting and singleton removal") {
  const auto dend = hier_cluster_distances(sym3(0.1, 0.9, 0.8, 0.0), {"A", "B", "C"});
  const auto all = cut_to_k(dend, 3);
  CHECK(all.effective_count() == 3);
  const auto one = cut_to_k(dend, 1);
  REQUIRE(one.effective_count() == 1);
  CHECK(one.clusters[0] == std::vector<std::size_t>{0, 1, 2});
  const auto two = cut_to_k(dend, 2);
  REQUIRE(two.effective_count() == 2);
  CHECK(two.clusters[0] == std::vector<std::size_t>{0, 1});
  CHECK(two.clusters[1] == std::vector<std::size_t>{2});
  CHECK(two.cluster_of(2) == 1u);
  CHECK_THROWS(cut_to_k(dend, 0));
  CHECK_THROWS(cut_to_k(dend, 4));

  const auto kept = drop_singletons(two);
  REQUIRE(kept.effective_count() == 1);
  CHECK(kept.clusters[0] == std::vector<std::size_t>{0, 1});
  CHECK(kept.singletons_removed == std::vector<std::size_t>{2});
  CHECK_FALSE(kept.cluster_of(2).has_value());
  const auto same = drop_singletons(one);
  CHECK(same.clusters == one.clusters);
  CHECK(same.singletons_removed.empty());
  CHECK_THROWS_WITH(drop_singletons(all), doctest::Contains("no non-singleton clusters"));
}

TEST_CASE("representatives") {
  const auto sim = SimilarityMatrix::from_values({"A", "B", "C"}, sym3(0.9, 0.8, 0.5, 1.0));
  auto c = cut_to_k(hier_cluster(sim), 1);
  c = select_representatives(c, sim);
  CHECK(c.representative_ids() == std::vector<std::string>{"A"});

  auto singles = select_representatives(cut_to_k(hier_cluster(sim), 3), sim);
  CHECK(singles.representative_ids() == std::vector<std::string>{"A", "B", "C"});

  // Equal averages: the smaller id wins regardless of index order.
  const auto tie = SimilarityMatrix::from_values({"zeta", "alpha"}, sym3(0.7, 0.0, 0.0, 1.0).topLeftCorner(2, 2));
  const auto tc = select_representatives(cut_to_k(hier_cluster(tie), 1), tie);
  CHECK(tc.representative_ids() == std::vector<std::string>{"alpha"});
}

TEST_CASE("diversity worked examples") {
  const auto ones = SimilarityMatrix::from_values({"a", "b", "c"}, MatrixXd::Ones(3, 3));
  const auto r0 = diversity(std::vector<std::string>{"a", "b", "c"}, ones);
  CHECK(r0.d_total == 0.0);
  CHECK(r0.d_norm == 0.0);
  for (const auto& [id, v] : r0.ind) CHECK(v == 0.0);

  MatrixXd two(2, 2);
  two << 1, 0.2, 0.2, 1;
  const auto r2 = diversity(std::vector<std::string>{"a", "b"}, SimilarityMatrix::from_values({"a", "b"}, two));
  CHECK(r2.ind.at("a") == 0.8);
  CHECK(r2.ind.at("b") == 0.8);
  CHECK(r2.d_total == 1.6);
  CHECK(r2.d_norm == 0.8);

  const auto three = SimilarityMatrix::from_values({"m1", "m2", "m3"}, sym3(0.9, 0.1, 0.2, 1.0));
  const auto r3 = diversity(std::vector<std::string>{"m1", "m2", "m3"}, three);
  CHECK(r3.ind.at("m1") == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(r3.ind.at("m2") == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(r3.ind.at("m3") == 0.8);
  CHECK(r3.d_total == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r3.d_norm == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS(diversity(std::vector<std::string>{"m1"}, three));
}

TEST_CASE("kneedle") {
  const std::vector<double> xs{1, 2, 3, 4, 5, 6};
  CHECK(kneedle_knee(xs, std::vector<double>{0, 0.6, 0.8, 0.9, 0.95, 1.0}) == 2.0);
  CHECK_FALSE(kneedle_knee(xs, std::vector<double>{1, 2, 3, 4, 5, 6}).has_value());
  CHECK_FALSE(kneedle_knee(xs, std::vector<double>(6, 0.4)).has_value());
  CHECK_THROWS(kneedle_knee(std::vector<double>{1, 1, 2}, std::vector<double>{0, 1, 2}));

  // Steep rise then a shallow tail: the single curvature maximum is the planted index.
  std::mt19937_64 rng(32);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(6, 12)(rng);
    const std::size_t knee = std::uniform_int_distribution<std::size_t>(1, n - 3)(rng);
    const double steep = std::uniform_real_distribution<double>(1.0, 3.0)(rng);
    const double shallow = std::uniform_real_distribution<double>(0.0, 0.1)(rng) * steep;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 2.0 + double(i);
      y[i] = i <= knee ? steep * double(i) : steep * double(knee) + shallow * double(i - knee);
    }
    CHECK(kneedle_knee_index(x, y) == knee);
  }
}

TEST_CASE("optimal k") {
  AnalysisOptions opt;
  opt.k_min = 2;
  opt.k_max = 8;
  std::vector<DiversityPoint> curve;
  const std::vector<double> total{0.5, 1.2, 1.9, 2.0, 2.05, 2.1, 2.12};
  for (int k = 2; k <= 8; ++k) curve.push_back({k, static_cast<std::size_t>(k), true, total[k - 2], total[k - 2] / k});
  const auto r = choose_optimal_k_from_curve(curve, opt);
  CHECK(r.knee == 4);
  CHECK(r.k == 5);
  CHECK_FALSE(r.no_knee);

  // Constant D_norm: D is linear, no knee, argmax rule with the flag.
  std::vector<DiversityPoint> flat;
  for (int k = 2; k <= 8; ++k) flat.push_back({k, static_cast<std::size_t>(k), true, 0.3 * k, 0.3});
  const auto rf = choose_optimal_k_from_curve(flat, opt);
  CHECK(rf.no_knee);
  CHECK_FALSE(rf.knee.has_value());
  CHECK(rf.k == 2);
  AnalysisOptions normalized = opt;
  normalized.elbow = ElbowCurve::normalized;
  CHECK(choose_optimal_k_from_curve(flat, normalized).no_knee);

  // Invalid points are skipped by both the knee search and the fallback.
  std::vector<DiversityPoint> sparse = flat;
  sparse[0].valid = false;
  sparse[3].d_norm = 0.31;
  CHECK(choose_optimal_k_from_curve(sparse, opt).k == 5);
  for (auto& p : sparse) p.valid = false;
  CHECK_THROWS_AS(choose_optimal_k_from_curve(sparse, opt), DataError);
}

TEST_CASE("planted redundancy recovers the groups") {
  // Four groups of three near-duplicates; groups are uncorrelated.
  const Index m = 12;
  MatrixXd r = MatrixXd::Zero(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) r(i, j) = i == j ? 1.0 : (i / 3 == j / 3 ? 0.95 - 0.01 * double((i + j) % 3) : 0.05);
  const auto sim = SimilarityMatrix::from_values(letters(m), r);
  const auto dend = hier_cluster(sim);
  AnalysisOptions opt;
  opt.k_min = 2;
  opt.k_max = 10;
  const auto best = choose_optimal_k(dend, sim, opt);
  const auto c = cluster_metrics(dend, sim, best.k, opt.singletons);
  CHECK(c.effective_count() == 4);
  std::set<Index> groups;
  for (auto rep : c.representatives) groups.insert(static_cast<Index>(rep) / 3);
  CHECK(groups.size() == 4);
}
