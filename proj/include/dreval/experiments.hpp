#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dreval/analysis.hpp"
#include "dreval/types.hpp"

namespace dreval {

enum class StrategyKind { random, class_based, cluster_based };

std::string to_string(StrategyKind kind);
StrategyKind strategy_from_string(const std::string& name);

struct SelectionStrategy {
  StrategyKind kind = StrategyKind::random;
  int k = 1;
  std::uint64_t seed = 0;
};

/// Slot counts per category for a class-based draw: as even as possible,
/// remainder slots to uniformly chosen categories, and slots a category cannot
/// hold spilled evenly onto the others.
std::vector<int> class_slot_counts(int k, const std::vector<int>& capacities, std::mt19937_64& rng);

/// Draws k distinct metric indices (ascending). cluster_based needs a
/// clustering with exactly k retained clusters and picks one member of each.
std::vector<std::size_t> draw_metric_set(StrategyKind kind, int k, std::span<const MetricInfo> catalog,
                                         const MetricClustering* clustering, std::mt19937_64& rng);
std::vector<std::size_t> draw_metric_set(const SelectionStrategy& strategy, std::span<const MetricInfo> catalog,
                                         const MetricClustering* clustering = nullptr);

enum class Aggregation {
  mean_rank,
  /// Mean of min-max normalized, orientation-aligned scores (sensitivity switch).
  mean_normalized_score,
};

std::string to_string(Aggregation a);
Aggregation aggregation_from_string(const std::string& name);

/// One ranking of the dataset's projections from a metric set.
QualityRanking aggregate_ranking(const ScoreTensor& tensor, std::size_t dataset, std::span<const std::size_t> set,
                                 Aggregation aggregation = Aggregation::mean_rank);

/// Mean pairwise Spearman rho. Above 200 rankings, 5000 uniformly drawn
/// distinct pairs are used instead of all pairs.
double rank_stability(std::span<const VectorXd> rankings, std::uint64_t seed = 0);

struct StabilityReport {
  StrategyKind strategy = StrategyKind::random;
  int k = 0;
  std::vector<double> per_dataset;
  double stability = 0.0;
  int repeats = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t seed = 0;
  /// Pairwise rho between repeats, averaged over datasets (bootstrap input).
  MatrixXd pairwise;
};

struct SweepOptions {
  int k_min = 4;
  int k_max = 10;
  int repeats = 50;
  std::uint64_t seed = 0;
  std::vector<StrategyKind> strategies{StrategyKind::random, StrategyKind::class_based, StrategyKind::cluster_based};
  Aggregation aggregation = Aggregation::mean_rank;
  int bootstrap = 1000;
  int threads = 1;
};

/// Rank stability of each strategy for each k. cluster_based uses the
/// dendrogram cut at k (singletons kept, one pick per cluster).
std::vector<StabilityReport> stability_sweep(const ScoreTensor& tensor, const Dendrogram& dend,
                                             const SweepOptions& options);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap over repeats of the stability of one report.
Interval bootstrap_interval(const MatrixXd& pairwise, int replicates, std::uint64_t seed);
/// Percentile bootstrap of stability(a) - stability(b), resampling each independently.
Interval bootstrap_difference(const StabilityReport& a, const StabilityReport& b, int replicates, std::uint64_t seed);

}  // namespace dreval
