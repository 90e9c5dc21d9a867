#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dreval/types.hpp"

namespace dreval {

/// Metric-by-metric Spearman correlations of quality rankings, averaged over datasets.
struct SimilarityMatrix {
  std::vector<std::string> ids;
  MatrixXd values;

  // Audit: the per-dataset correlation slices and which (dataset, metric)
  // cells were constant (rho forced to 0) or undefined (skipped).
  std::vector<std::string> dataset_ids;
  std::vector<MatrixXd> per_dataset;
  std::vector<std::vector<bool>> constant;
  std::vector<std::vector<bool>> undefined;

  std::size_t size() const { return ids.size(); }
  std::size_t index_of(const std::string& id) const;

  /// Plain m x m matrix with explicit ids.
  static SimilarityMatrix from_values(std::vector<std::string> ids, MatrixXd values);
};

SimilarityMatrix metric_similarity_matrix(const ScoreTensor& tensor);

/// Merge record; node ids < m are leaves, id m + t is the node created by merge t.
struct Merge {
  Index left = 0;
  Index right = 0;
  double height = 0.0;
  Index size = 0;
};

struct Dendrogram {
  std::vector<std::string> leaf_ids;
  std::vector<Merge> merges;

  std::size_t leaf_count() const { return leaf_ids.size(); }
  /// Left-to-right leaf order of the tree (heatmap ordering).
  std::vector<std::size_t> leaf_order() const;
};

/// Average-linkage (UPGMA) clustering of distances 1 - R. The closest pair is
/// chosen with ties broken by smallest (left id, right id).
Dendrogram hier_cluster(const SimilarityMatrix& sim);
/// Same, given a symmetric distance matrix directly.
Dendrogram hier_cluster_distances(const MatrixXd& dist, std::vector<std::string> ids);

struct MetricClustering {
  std::vector<std::string> metric_ids;
  int k_requested = 0;
  /// Retained clusters as metric indices, each sorted ascending; clusters are
  /// ordered by their smallest member.
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> singletons_removed;
  /// representatives[c] is a member of clusters[c]; empty until selected.
  std::vector<std::size_t> representatives;

  std::size_t effective_count() const { return clusters.size(); }
  std::optional<std::size_t> cluster_of(std::size_t metric) const;
  std::vector<std::string> representative_ids() const;
};

/// Undoes the last k-1 merges.
MetricClustering cut_to_k(const Dendrogram& dend, int k);

/// Moves size-1 clusters to singletons_removed. Throws InvalidArgument when
/// nothing would remain.
MetricClustering drop_singletons(MetricClustering clustering);

/// Per cluster, the member with the highest mean similarity to the other
/// members; ties go to the lexicographically smallest id.
MetricClustering select_representatives(MetricClustering clustering, const SimilarityMatrix& sim);

struct DiversityReport {
  std::size_t k = 0;
  std::map<std::string, double> ind;
  double d_total = 0.0;
  double d_norm = 0.0;
};

/// Ind(M_i) = min_{j != i} (1 - R_ij), D = sum Ind, D_norm = D / k.
DiversityReport diversity(std::span<const std::size_t> selected, const SimilarityMatrix& sim);
DiversityReport diversity(std::span<const std::string> selected, const SimilarityMatrix& sim);

/// Kneedle on a concave increasing curve (no smoothing, offline). Returns the
/// index of the first candidate whose threshold fires.
std::optional<std::size_t> kneedle_knee_index(std::span<const double> xs, std::span<const double> ys,
                                              double sensitivity = 1.0);
std::optional<double> kneedle_knee(std::span<const double> xs, std::span<const double> ys,
                                   double sensitivity = 1.0);

enum class SingletonPolicy { drop, keep };

/// Curve searched for the elbow: total diversity D(k) or D_norm(k).
enum class ElbowCurve { total, normalized };

struct AnalysisOptions {
  int k_min = 2;
  int k_max = 10;
  double kneedle_sensitivity = 1.0;
  SingletonPolicy singletons = SingletonPolicy::drop;
  ElbowCurve elbow = ElbowCurve::total;
};

/// Cut, apply the singleton policy, select representatives.
MetricClustering cluster_metrics(const Dendrogram& dend, const SimilarityMatrix& sim, int k,
                                 SingletonPolicy policy);

struct DiversityPoint {
  int k = 0;
  std::size_t effective = 0;
  /// False when fewer than two representatives survive; such points are
  /// excluded from the knee search.
  bool valid = false;
  double d_total = 0.0;
  double d_norm = 0.0;
};

struct OptimalK {
  int k = 0;
  std::optional<int> knee;
  bool no_knee = false;
  std::vector<DiversityPoint> curve;
};

std::vector<DiversityPoint> diversity_curve(const Dendrogram& dend, const SimilarityMatrix& sim,
                                            const AnalysisOptions& options);

/// Picks the cluster count one beyond the Kneedle elbow of the chosen curve,
/// clamped to the range; without a knee, the k maximizing D_norm (flagged).
OptimalK choose_optimal_k(const Dendrogram& dend, const SimilarityMatrix& sim, const AnalysisOptions& options);
OptimalK choose_optimal_k_from_curve(std::vector<DiversityPoint> curve, const AnalysisOptions& options);

}  // namespace dreval
