#include "dreval/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dreval {

VectorXd fractional_rank(const Eigen::Ref<const VectorXd>& values) {
  const Index n = values.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) < values(b); });

  VectorXd ranks(n);
  for (Index start = 0; start < n;) {
    Index end = start + 1;
    while (end < n && values(order[static_cast<std::size_t>(end)]) == values(order[static_cast<std::size_t>(start)]))
      ++end;
    // Positions start..end-1 share the average of ranks start+1..end.
    const double avg = 0.5 * static_cast<double>(start + 1 + end);
    for (Index i = start; i < end; ++i) ranks(order[static_cast<std::size_t>(i)]) = avg;
    start = end;
  }
  return ranks;
}

VectorXd quality_ranks(const Eigen::Ref<const VectorXd>& scores, Orientation orientation) {
  if (orientation == Orientation::lower_better) return fractional_rank(scores);
  return fractional_rank(-scores);
}

QualityRanking quality_ranking(const ScoreTensor& tensor, std::size_t dataset, std::size_t metric) {
  return {tensor.datasets.at(dataset), tensor.metrics.at(metric).id,
          quality_ranks(tensor.scores.at(dataset).col(static_cast<Index>(metric)), tensor.metrics[metric].orientation)};
}

double pearson(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
  require(a.size() == b.size(), "pearson: length mismatch");
  require(a.size() >= 2, "pearson: need at least 2 values");
  const VectorXd da = a.array() - a.mean();
  const VectorXd db = b.array() - b.mean();
  const double saa = da.squaredNorm(), sbb = db.squaredNorm();
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(da.dot(db) / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

// Tie-free fractional ranks are a permutation of 1..n.
bool integer_permutation(const Eigen::Ref<const VectorXd>& r) {
  const Index n = r.size();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) {
    const double v = r(i);
    if (v != std::round(v) || v < 1 || v > static_cast<double>(n)) return false;
    auto& s = seen[static_cast<std::size_t>(v) - 1];
    if (s) return false;
    s = 1;
  }
  return true;
}

}  // namespace

Correlation spearman_of_ranks(const Eigen::Ref<const VectorXd>& ra, const Eigen::Ref<const VectorXd>& rb) {
  require(ra.size() == rb.size(), "spearman_rho: length mismatch");
  const Index n = ra.size();
  require(n >= 2, "spearman_rho: need at least 2 values");

  const bool const_a = (ra.array() == ra(0)).all();
  const bool const_b = (rb.array() == rb(0)).all();
  if (const_a || const_b) return {0.0, true};

  if (integer_permutation(ra) && integer_permutation(rb)) {
    long long sum_d2 = 0;
    for (Index i = 0; i < n; ++i) {
      const auto d = static_cast<long long>(ra(i)) - static_cast<long long>(rb(i));
      sum_d2 += d * d;
    }
    const double nd = static_cast<double>(n);
    return {1.0 - 6.0 * static_cast<double>(sum_d2) / (nd * (nd * nd - 1.0)), false};
  }
  return {pearson(ra, rb), false};
}

Correlation spearman_rho(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
  require(a.size() == b.size(), "spearman_rho: length mismatch");
  require(a.size() >= 2, "spearman_rho: need at least 2 values");
  require(a.allFinite() && b.allFinite(), "spearman_rho: non-finite input");
  return spearman_of_ranks(fractional_rank(a), fractional_rank(b));
}

}  // namespace dreval
