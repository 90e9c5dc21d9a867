#include "dreval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "dreval/ranking.hpp"

namespace dreval {

std::size_t SimilarityMatrix::index_of(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw InvalidArgument("similarity matrix has no metric '" + id + "'");
  return static_cast<std::size_t>(it - ids.begin());
}

SimilarityMatrix SimilarityMatrix::from_values(std::vector<std::string> ids, MatrixXd values) {
  require(values.rows() == values.cols() && values.rows() == static_cast<Index>(ids.size()),
          "similarity matrix: shape does not match ids");
  SimilarityMatrix s;
  s.ids = std::move(ids);
  s.values = std::move(values);
  return s;
}

SimilarityMatrix metric_similarity_matrix(const ScoreTensor& tensor) {
  const std::size_t m = tensor.metric_count();
  require(m >= 1, "metric_similarity_matrix: no metrics");
  require(tensor.dataset_count() >= 1, "metric_similarity_matrix: no datasets");

  SimilarityMatrix sim;
  sim.ids = tensor.metric_ids();
  sim.dataset_ids = tensor.datasets;
  MatrixXd sum = MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(m));
  Eigen::MatrixXi count = Eigen::MatrixXi::Zero(static_cast<Index>(m), static_cast<Index>(m));

  for (std::size_t d = 0; d < tensor.dataset_count(); ++d) {
    const MatrixXd& scores = tensor.scores[d];
    require(scores.rows() >= 2, "metric_similarity_matrix: dataset '" + tensor.datasets[d] +
                                    "' needs at least 2 projections");
    std::vector<bool> undefined(m), constant(m);
    std::vector<VectorXd> ranks(m);
    for (std::size_t a = 0; a < m; ++a) {
      const auto col = scores.col(static_cast<Index>(a));
      undefined[a] = !col.allFinite();
      if (undefined[a]) continue;
      constant[a] = (col.array() == col(0)).all();
      ranks[a] = quality_ranks(col, tensor.metrics[a].orientation);
    }

    MatrixXd slice = MatrixXd::Constant(static_cast<Index>(m), static_cast<Index>(m),
                                        std::numeric_limits<double>::quiet_NaN());
    for (std::size_t a = 0; a < m; ++a) {
      if (undefined[a]) continue;
      slice(static_cast<Index>(a), static_cast<Index>(a)) = 1.0;
      for (std::size_t b = a + 1; b < m; ++b) {
        if (undefined[b]) continue;
        const double rho = spearman_of_ranks(ranks[a], ranks[b]).rho;
        slice(static_cast<Index>(a), static_cast<Index>(b)) = rho;
        slice(static_cast<Index>(b), static_cast<Index>(a)) = rho;
        sum(static_cast<Index>(a), static_cast<Index>(b)) += rho;
        count(static_cast<Index>(a), static_cast<Index>(b)) += 1;
      }
    }
    sim.per_dataset.push_back(std::move(slice));
    sim.constant.push_back(std::move(constant));
    sim.undefined.push_back(std::move(undefined));
  }

  sim.values = MatrixXd::Identity(static_cast<Index>(m), static_cast<Index>(m));
  for (Index a = 0; a < static_cast<Index>(m); ++a) {
    for (Index b = a + 1; b < static_cast<Index>(m); ++b) {
      if (count(a, b) == 0)
        throw DataError("metric_similarity_matrix: no dataset defines both " + sim.ids[static_cast<std::size_t>(a)] +
                        " and " + sim.ids[static_cast<std::size_t>(b)]);
      const double v = sum(a, b) / count(a, b);
      sim.values(a, b) = v;
      sim.values(b, a) = v;
    }
  }
  return sim;
}

std::vector<std::size_t> Dendrogram::leaf_order() const {
  const std::size_t m = leaf_count();
  if (merges.empty()) {
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
  }
  std::vector<std::size_t> order;
  order.reserve(m);
  std::function<void(Index)> walk = [&](Index node) {
    if (node < static_cast<Index>(m)) {
      order.push_back(static_cast<std::size_t>(node));
      return;
    }
    const Merge& mg = merges[static_cast<std::size_t>(node) - m];
    walk(mg.left);
    walk(mg.right);
  };
  walk(static_cast<Index>(m + merges.size() - 1));
  return order;
}

Dendrogram hier_cluster_distances(const MatrixXd& dist, std::vector<std::string> ids) {
  const Index m = dist.rows();
  require(dist.cols() == m && static_cast<Index>(ids.size()) == m, "hier_cluster: shape mismatch");
  require(m >= 2, "hier_cluster: need at least 2 metrics");
  require(dist.allFinite(), "hier_cluster: non-finite distance");

  // Linkage of clusters A, B (A the older node) is the mean of d(x, y) summed
  // with x over A outer and y over B inner, both in ascending member order.
  // Heights therefore depend only on membership, not on merge history.
  const Index nodes = 2 * m - 1;
  MatrixXd link = MatrixXd::Zero(nodes, nodes);
  link.topLeftCorner(m, m) = dist;
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(nodes));
  for (Index i = 0; i < m; ++i) members[static_cast<std::size_t>(i)] = {i};
  std::vector<Index> active(static_cast<std::size_t>(m));
  std::iota(active.begin(), active.end(), Index{0});

  Dendrogram dend;
  dend.leaf_ids = std::move(ids);
  for (Index t = 0; t < m - 1; ++t) {
    double best = std::numeric_limits<double>::infinity();
    Index best_a = -1, best_b = -1;
    // `active` stays sorted, so scanning (a, b) in order realizes the
    // lexicographic tie rule with a strict comparison.
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        const Index a = active[i], b = active[j];
        const double h = link(a, b);
        if (h < best) {
          best = h;
          best_a = a;
          best_b = b;
        }
      }
    }
    const Index node = m + t;
    auto& merged = members[static_cast<std::size_t>(node)];
    merged = members[static_cast<std::size_t>(best_a)];
    merged.insert(merged.end(), members[static_cast<std::size_t>(best_b)].begin(),
                  members[static_cast<std::size_t>(best_b)].end());
    std::sort(merged.begin(), merged.end());
    for (Index c : active) {
      if (c == best_a || c == best_b) continue;
      double s = 0.0;
      for (Index x : members[static_cast<std::size_t>(c)])
        for (Index y : merged) s += dist(x, y);
      const double h = s / double(static_cast<Index>(members[static_cast<std::size_t>(c)].size() * merged.size()));
      link(node, c) = h;
      link(c, node) = h;
    }
    active.erase(std::remove_if(active.begin(), active.end(), [&](Index c) { return c == best_a || c == best_b; }),
                 active.end());
    active.push_back(node);
    dend.merges.push_back({best_a, best_b, best, static_cast<Index>(merged.size())});
  }
  return dend;
}

Dendrogram hier_cluster(const SimilarityMatrix& sim) {
  const MatrixXd dist = (1.0 - sim.values.array()).matrix();
  MatrixXd sym = 0.5 * (dist + dist.transpose());
  sym.diagonal().setZero();
  return hier_cluster_distances(sym, sim.ids);
}

std::optional<std::size_t> MetricClustering::cluster_of(std::size_t metric) const {
  for (std::size_t c = 0; c < clusters.size(); ++c)
    if (std::find(clusters[c].begin(), clusters[c].end(), metric) != clusters[c].end()) return c;
  return std::nullopt;
}

std::vector<std::string> MetricClustering::representative_ids() const {
  std::vector<std::string> out;
  for (std::size_t r : representatives) out.push_back(metric_ids[r]);
  return out;
}

MetricClustering cut_to_k(const Dendrogram& dend, int k) {
  const auto m = static_cast<Index>(dend.leaf_count());
  require(k >= 1 && k <= m, "cut_to_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(m) + "]");

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(m + static_cast<Index>(dend.merges.size())));
  std::vector<bool> alive(members.size(), false);
  for (Index i = 0; i < m; ++i) {
    members[static_cast<std::size_t>(i)] = {static_cast<std::size_t>(i)};
    alive[static_cast<std::size_t>(i)] = true;
  }
  for (Index t = 0; t < m - k; ++t) {
    const Merge& mg = dend.merges[static_cast<std::size_t>(t)];
    auto& out = members[static_cast<std::size_t>(m + t)];
    for (Index child : {mg.left, mg.right}) {
      auto& src = members[static_cast<std::size_t>(child)];
      out.insert(out.end(), src.begin(), src.end());
      alive[static_cast<std::size_t>(child)] = false;
    }
    alive[static_cast<std::size_t>(m + t)] = true;
  }

  MetricClustering c;
  c.metric_ids = dend.leaf_ids;
  c.k_requested = k;
  for (std::size_t node = 0; node < members.size(); ++node) {
    if (!alive[node]) continue;
    auto cl = members[node];
    std::sort(cl.begin(), cl.end());
    c.clusters.push_back(std::move(cl));
  }
  std::sort(c.clusters.begin(), c.clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return c;
}

MetricClustering drop_singletons(MetricClustering clustering) {
  std::vector<std::vector<std::size_t>> kept;
  std::vector<std::size_t> kept_reps;
  for (std::size_t c = 0; c < clustering.clusters.size(); ++c) {
    auto& cl = clustering.clusters[c];
    if (cl.size() == 1) {
      clustering.singletons_removed.push_back(cl.front());
      continue;
    }
    if (!clustering.representatives.empty()) kept_reps.push_back(clustering.representatives[c]);
    kept.push_back(std::move(cl));
  }
  if (kept.empty()) throw InvalidArgument("drop_singletons: no non-singleton clusters");
  std::sort(clustering.singletons_removed.begin(), clustering.singletons_removed.end());
  clustering.clusters = std::move(kept);
  clustering.representatives = std::move(kept_reps);
  return clustering;
}

MetricClustering select_representatives(MetricClustering clustering, const SimilarityMatrix& sim) {
  clustering.representatives.clear();
  for (const auto& cl : clustering.clusters) {
    require(!cl.empty(), "select_representatives: empty cluster");
    std::size_t best = cl.front();
    double best_avg = -std::numeric_limits<double>::infinity();
    for (std::size_t a : cl) {
      const std::size_t ia = sim.index_of(clustering.metric_ids[a]);
      double avg = 0.0;
      if (cl.size() > 1) {
        for (std::size_t b : cl)
          if (b != a) avg += sim.values(static_cast<Index>(ia), static_cast<Index>(sim.index_of(clustering.metric_ids[b])));
        avg /= double(cl.size() - 1);
      }
      if (avg > best_avg || (avg == best_avg && clustering.metric_ids[a] < clustering.metric_ids[best])) {
        best = a;
        best_avg = avg;
      }
    }
    clustering.representatives.push_back(best);
  }
  return clustering;
}

DiversityReport diversity(std::span<const std::size_t> selected, const SimilarityMatrix& sim) {
  require(selected.size() >= 2, "diversity: need at least 2 selected metrics");
  DiversityReport r;
  r.k = selected.size();
  for (std::size_t i : selected) {
    require(i < sim.size(), "diversity: metric index out of range");
    double ind = std::numeric_limits<double>::infinity();
    for (std::size_t j : selected)
      if (j != i) ind = std::min(ind, 1.0 - sim.values(static_cast<Index>(i), static_cast<Index>(j)));
    r.ind[sim.ids[i]] = ind;
    r.d_total += ind;
  }
  require(r.ind.size() == selected.size(), "diversity: duplicate metric in selection");
  r.d_norm = r.d_total / double(r.k);
  return r;
}

DiversityReport diversity(std::span<const std::string> selected, const SimilarityMatrix& sim) {
  std::vector<std::size_t> idx;
  for (const auto& id : selected) idx.push_back(sim.index_of(id));
  return diversity(idx, sim);
}

std::optional<std::size_t> kneedle_knee_index(std::span<const double> xs, std::span<const double> ys,
                                              double sensitivity) {
  const std::size_t n = xs.size();
  require(n >= 3, "kneedle: need at least 3 points");
  require(ys.size() == n, "kneedle: xs and ys differ in length");
  for (std::size_t i = 1; i < n; ++i) require(xs[i] > xs[i - 1], "kneedle: xs must be strictly increasing");

  const auto [ymin_it, ymax_it] = std::minmax_element(ys.begin(), ys.end());
  const double ymin = *ymin_it, ymax = *ymax_it;
  if (!(ymax > ymin)) return std::nullopt;
  const double x0 = xs.front(), xspan = xs.back() - xs.front();

  std::vector<double> xn(n), diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    xn[i] = (xs[i] - x0) / xspan;
    diff[i] = (ys[i] - ymin) / (ymax - ymin) - xn[i];
  }
  double mean_dx = 0.0;
  for (std::size_t i = 1; i < n; ++i) mean_dx += xn[i] - xn[i - 1];
  mean_dx /= double(n - 1);

  // Differences closer than kTie count as equal, so rounding in the
  // normalization cannot split a plateau into a later maximum.
  constexpr double kTie = 1e-12;
  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (diff[i] > diff[i - 1] + kTie && diff[i] + kTie >= diff[i + 1]) maxima.push_back(i);

  for (std::size_t c = 0; c < maxima.size(); ++c) {
    const std::size_t i = maxima[c];
    const std::size_t stop = c + 1 < maxima.size() ? maxima[c + 1] : n;
    const double threshold = diff[i] - sensitivity * mean_dx;
    for (std::size_t j = i + 1; j < stop; ++j)
      if (diff[j] < threshold) return i;
  }
  return std::nullopt;
}

std::optional<double> kneedle_knee(std::span<const double> xs, std::span<const double> ys, double sensitivity) {
  if (const auto i = kneedle_knee_index(xs, ys, sensitivity)) return xs[*i];
  return std::nullopt;
}

MetricClustering cluster_metrics(const Dendrogram& dend, const SimilarityMatrix& sim, int k, SingletonPolicy policy) {
  MetricClustering c = cut_to_k(dend, k);
  if (policy == SingletonPolicy::drop) c = drop_singletons(std::move(c));
  return select_representatives(std::move(c), sim);
}

std::vector<DiversityPoint> diversity_curve(const Dendrogram& dend, const SimilarityMatrix& sim,
                                            const AnalysisOptions& options) {
  const int m = static_cast<int>(dend.leaf_count());
  require(options.k_min >= 2 && options.k_min <= options.k_max && options.k_max <= m,
          "diversity curve: k range must lie within [2, " + std::to_string(m) + "]");
  std::vector<DiversityPoint> curve;
  for (int k = options.k_min; k <= options.k_max; ++k) {
    DiversityPoint pt;
    pt.k = k;
    try {
      const auto c = cluster_metrics(dend, sim, k, options.singletons);
      pt.effective = c.effective_count();
      if (c.representatives.size() >= 2) {
        const auto rep = diversity(c.representatives, sim);
        pt.valid = true;
        pt.d_total = rep.d_total;
        pt.d_norm = rep.d_norm;
      }
    } catch (const InvalidArgument&) {
      pt.effective = 0;  // every cluster was a singleton
    }
    curve.push_back(pt);
  }
  return curve;
}

OptimalK choose_optimal_k_from_curve(std::vector<DiversityPoint> curve, const AnalysisOptions& options) {
  OptimalK out;
  out.curve = std::move(curve);
  std::vector<double> xs, ys;
  for (const auto& p : out.curve)
    if (p.valid) {
      xs.push_back(p.k);
      ys.push_back(options.elbow == ElbowCurve::total ? p.d_total : p.d_norm);
    }
  if (xs.empty()) throw DataError("choose_optimal_k: no cluster count yields two or more representatives");

  if (xs.size() >= 3) {
    if (const auto knee = kneedle_knee(xs, ys, options.kneedle_sensitivity)) {
      out.knee = static_cast<int>(*knee);
      out.k = std::clamp(*out.knee + 1, options.k_min, options.k_max);
      return out;
    }
  }
  out.no_knee = true;
  std::size_t best = 0;
  std::vector<const DiversityPoint*> valid;
  for (const auto& p : out.curve)
    if (p.valid) valid.push_back(&p);
  for (std::size_t i = 1; i < valid.size(); ++i)
    if (valid[i]->d_norm > valid[best]->d_norm) best = i;
  out.k = valid[best]->k;
  return out;
}

OptimalK choose_optimal_k(const Dendrogram& dend, const SimilarityMatrix& sim, const AnalysisOptions& options) {
  return choose_optimal_k_from_curve(diversity_curve(dend, sim, options), options);
}

}  // namespace dreval
