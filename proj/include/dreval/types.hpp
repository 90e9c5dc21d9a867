#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dreval/common.hpp"

namespace dreval {

/// Labeled high-dimensional point set, one row per point.
struct DatasetTable {
  std::string id;
  MatrixXd points;
  std::vector<int> labels;

  Index n() const { return points.rows(); }
  Index d() const { return points.cols(); }
  int class_count() const;

  /// Throws DataError when the table breaks its invariants
  /// (n >= 4, d >= 2, one label per row, non-negative labels, finite features).
  void validate() const;
};

struct Provenance {
  std::string generator;
  std::map<std::string, double> hyperparameters;
  std::uint64_t seed = 0;

  bool operator==(const Provenance&) const = default;
};

/// One 2-D embedding of a dataset.
struct Projection {
  std::string dataset_id;
  Index index = 0;
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords;
  Provenance provenance;
};

struct ProjectionSet {
  std::string dataset_id;
  std::vector<Projection> projections;

  std::size_t size() const { return projections.size(); }
  /// Checks contiguous indices 0..size-1, expected row count, finite coordinates.
  void validate(Index expected_rows) const;
};

enum class Category { local, cluster_level, global };
enum class Orientation { higher_better, lower_better };

std::string to_string(Category c);
std::string to_string(Orientation o);
Category category_from_string(const std::string& s);
Orientation orientation_from_string(const std::string& s);

/// What downstream analysis needs to know about a score column.
struct MetricInfo {
  std::string id;
  Category category = Category::local;
  Orientation orientation = Orientation::higher_better;
};

/// Dense scores indexed by (dataset, projection, metric).
struct ScoreTensor {
  std::vector<std::string> datasets;
  std::vector<MetricInfo> metrics;
  /// scores[dataset] is (projections x metrics).
  std::vector<MatrixXd> scores;

  std::size_t dataset_count() const { return datasets.size(); }
  std::size_t metric_count() const { return metrics.size(); }
  Index projection_count(std::size_t dataset) const { return scores.at(dataset).rows(); }
  double at(std::size_t dataset, Index projection, std::size_t metric) const {
    return scores.at(dataset)(projection, static_cast<Index>(metric));
  }
  std::size_t metric_index(const std::string& id) const;
  std::vector<std::string> metric_ids() const;

  /// Throws DataError unless the tensor is dense and finite.
  void validate() const;
};

/// Orientation-normalized fractional ranking; rank 1 is the best projection.
struct QualityRanking {
  std::string dataset_id;
  std::string metric_id;
  VectorXd ranks;
};

}  // namespace dreval
