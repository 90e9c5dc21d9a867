#pragma once

#include "dreval/types.hpp"

namespace dreval {

/// Ascending fractional (average) ranks, 1-based: the smallest value gets rank 1.
VectorXd fractional_rank(const Eigen::Ref<const VectorXd>& values);

/// Rank 1 = best projection under the metric's orientation.
VectorXd quality_ranks(const Eigen::Ref<const VectorXd>& scores, Orientation orientation);

QualityRanking quality_ranking(const ScoreTensor& tensor, std::size_t dataset, std::size_t metric);

double pearson(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b);

struct Correlation {
  double rho = 0.0;
  /// Set when either input is constant; rho is then reported as 0.
  bool constant_input = false;
};

/// Spearman's rho as the Pearson correlation of fractional ranks. Tie-free
/// inputs use the closed form 1 - 6 sum d^2 / (n (n^2 - 1)) on integer ranks.
Correlation spearman_rho(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b);

/// Spearman on inputs that are already fractional rankings.
Correlation spearman_of_ranks(const Eigen::Ref<const VectorXd>& ra, const Eigen::Ref<const VectorXd>& rb);

}  // namespace dreval
