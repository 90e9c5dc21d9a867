#include "dreval/evaluate.hpp"

#include <set>

#include "dreval/metrics.hpp"
#include "dreval/parallel.hpp"

namespace dreval {

SpaceStructures::SpaceStructures(const MatrixXd& points, std::span<const MetricInstance> metrics)
    : dist(pairwise_distances(points)), rank(rank_matrix(dist)) {
  std::set<int> snn_sizes;
  for (const auto& m : metrics)
    if (m.family() == MetricFamily::neighbor_dissimilarity) snn_sizes.insert(m.k());
  for (int k : snn_sizes) snn.emplace(k, snn_similarity(knn_sets(rank, k), rank));
}

double evaluate_metric(const MetricInstance& metric, const DatasetTable& data, const SpaceStructures& data_space,
                       const Projection& projection, const SpaceStructures& proj_space) {
  const auto& labels = data.labels;
  switch (metric.family()) {
    case MetricFamily::trustworthiness_continuity:
      return trustworthiness_continuity(data_space.rank, proj_space.rank, metric.k());
    case MetricFamily::mrre:
      return mrre(data_space.rank, proj_space.rank, metric.k());
    case MetricFamily::neighbor_dissimilarity: {
      const auto a = data_space.snn.find(metric.k());
      const auto b = proj_space.snn.find(metric.k());
      if (a == data_space.snn.end() || b == proj_space.snn.end())
        return neighbor_dissimilarity(snn_similarity(knn_sets(data_space.rank, metric.k()), data_space.rank),
                                      snn_similarity(knn_sets(proj_space.rank, metric.k()), proj_space.rank));
      return neighbor_dissimilarity(a->second, b->second);
    }
    case MetricFamily::stress:
      return stress(data_space.dist, proj_space.dist);
    case MetricFamily::kl_divergence:
      return kl_divergence(data_space.dist, proj_space.dist, metric.sigma());
    case MetricFamily::distance_consistency:
      return distance_consistency(projection.coords, labels);
    case MetricFamily::silhouette:
      return silhouette(proj_space.dist, labels);
    case MetricFamily::label_trustworthiness:
      return label_trustworthiness(data_space.rank, proj_space.rank, labels, metric.k());
  }
  throw InvalidArgument("unknown metric family");
}

double evaluate_metric(const MetricInstance& metric, const DatasetTable& data, const Projection& projection) {
  const std::span<const MetricInstance> one(&metric, 1);
  const SpaceStructures data_space(data.points, one);
  const SpaceStructures proj_space(projection.coords, one);
  return evaluate_metric(metric, data, data_space, projection, proj_space);
}

EvaluationResult evaluate_all(std::span<const DatasetTable> datasets, std::span<const ProjectionSet> projection_sets,
                              std::span<const MetricInstance> metrics, const EvaluateOptions& options) {
  require(datasets.size() == projection_sets.size(), "evaluate_all: one projection set per dataset required");
  require(!metrics.empty(), "evaluate_all: no metrics");

  EvaluationResult result;
  auto& t = result.tensor;
  for (const auto& m : metrics) t.metrics.push_back(m.info());

  std::atomic<std::size_t> computed{0}, hits{0};
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto& data = datasets[d];
    const auto& set = projection_sets[d];
    data.validate();
    set.validate(data.n());
    for (const auto& m : metrics) {
      m.check_applicable(data.n());
      if (family_uses_labels(m.family()) && data.class_count() < 2)
        throw DataError("dataset '" + data.id + "': " + m.id() + " requires >=2 classes");
    }

    t.datasets.push_back(data.id);
    MatrixXd scores(static_cast<Index>(set.size()), static_cast<Index>(metrics.size()));
    std::optional<SpaceStructures> data_space;

    const auto score_projection = [&](std::size_t p) {
      const auto& proj = set.projections[p];
      const std::string fp = options.cache ? fingerprint(data, proj) : std::string();
      std::vector<std::size_t> missing;
      for (std::size_t m = 0; m < metrics.size(); ++m) {
        if (options.cache) {
          if (auto v = options.cache->get({data.id, proj.index, metrics[m].id(), fp})) {
            scores(static_cast<Index>(p), static_cast<Index>(m)) = *v;
            ++hits;
            continue;
          }
        }
        missing.push_back(m);
      }
      if (missing.empty()) return;

      const SpaceStructures proj_space(proj.coords, metrics);
      for (std::size_t m : missing) {
        double v = 0.0;
        try {
          v = evaluate_metric(metrics[m], data, *data_space, proj, proj_space);
        } catch (const std::exception& e) {
          throw DataError("(" + data.id + ", projection " + std::to_string(proj.index) + ", " + metrics[m].id() +
                          "): " + e.what());
        }
        scores(static_cast<Index>(p), static_cast<Index>(m)) = v;
        ++computed;
        if (options.cache) options.cache->put({data.id, proj.index, metrics[m].id(), fp}, v);
      }
    };

    // Build the data-space structures only when some score must be computed.
    bool all_cached = options.cache != nullptr;
    if (all_cached) {
      for (const auto& proj : set.projections) {
        const std::string fp = fingerprint(data, proj);
        for (const auto& m : metrics)
          if (!options.cache->get({data.id, proj.index, m.id(), fp})) {
            all_cached = false;
            break;
          }
        if (!all_cached) break;
      }
    }
    if (!all_cached) data_space.emplace(data.points, metrics);

    parallel_for(set.size(), options.threads, score_projection);
    t.scores.push_back(std::move(scores));
  }
  if (options.cache) options.cache->flush();
  result.computed = computed;
  result.cache_hits = hits;
  t.validate();
  return result;
}

}  // namespace dreval
