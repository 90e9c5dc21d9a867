#pragma once

#include <map>
#include <span>
#include <vector>

#include "dreval/metric_catalog.hpp"
#include "dreval/neighbors.hpp"
#include "dreval/score_cache.hpp"
#include "dreval/types.hpp"

namespace dreval {

/// Neighborhood structures of one space (data or projection), built once for
/// every k and SNN size the requested metrics need. Immutable afterwards.
struct SpaceStructures {
  DistanceMatrix<double> dist;
  RankMatrix rank;
  std::map<int, Matrix<double>> snn;

  SpaceStructures(const MatrixXd& points, std::span<const MetricInstance> metrics);
};

double evaluate_metric(const MetricInstance& metric, const DatasetTable& data, const SpaceStructures& data_space,
                       const Projection& projection, const SpaceStructures& proj_space);

/// Convenience path computing the structures from scratch.
double evaluate_metric(const MetricInstance& metric, const DatasetTable& data, const Projection& projection);

struct EvaluateOptions {
  ScoreCache* cache = nullptr;
  int threads = 1;
};

struct EvaluationResult {
  ScoreTensor tensor;
  std::size_t computed = 0;
  std::size_t cache_hits = 0;
};

/// Scores every (dataset, projection, metric) triple. datasets[i] pairs with
/// projection_sets[i]. Errors are rethrown annotated with the failing triple.
EvaluationResult evaluate_all(std::span<const DatasetTable> datasets, std::span<const ProjectionSet> projection_sets,
                              std::span<const MetricInstance> metrics, const EvaluateOptions& options = {});

}  // namespace dreval
