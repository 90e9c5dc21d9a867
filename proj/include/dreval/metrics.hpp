#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "dreval/common.hpp"
#include "dreval/neighbors.hpp"

// Projection quality metrics. Each is a pure function of precomputed
// neighborhood structures (or coordinates) of the data and of one projection.

namespace dreval {

namespace detail {

inline void check_same_size(Index a, Index b, const char* what) {
  require(a == b, std::string(what) + ": data and projection sizes differ");
}

/// Labels compacted to 0..c-1 in order of first appearance.
inline std::vector<int> compact_labels(std::span<const int> labels, int& classes) {
  std::map<int, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = ids.try_emplace(l, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  classes = static_cast<int>(ids.size());
  return out;
}

inline void check_classes(int classes, const char* what) {
  require(classes >= 2, std::string(what) + ": cluster-level metric requires >=2 classes");
}

}  // namespace detail

struct TrustContinuity {
  double trustworthiness = 1.0;
  double continuity = 1.0;
  double combined = 1.0;
};

inline TrustContinuity trustworthiness_continuity_parts(const RankMatrix& data, const RankMatrix& proj, int k) {
  const Index n = data.size();
  detail::check_same_size(n, proj.size(), "trustworthiness_continuity");
  const double nd = static_cast<double>(n);
  const double denom_factor = 2.0 * nd - 3.0 * k - 1.0;
  require(k >= 1 && k <= n - 2 && denom_factor > 0, "trustworthiness_continuity: k too large for n");

  double t_penalty = 0.0;
  double c_penalty = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (int r = 0; r < k; ++r) {
      // U_k(i): projection neighbors that are not data neighbors.
      const Index j = proj.order(i, r);
      if (data(i, j) > k) t_penalty += data(i, j) - k;
      // V_k(i): data neighbors missing from the projection neighborhood.
      const Index l = data.order(i, r);
      if (proj(i, l) > k) c_penalty += proj(i, l) - k;
    }
  }
  const double norm = 2.0 / (nd * k * denom_factor);
  TrustContinuity out;
  out.trustworthiness = 1.0 - norm * t_penalty;
  out.continuity = 1.0 - norm * c_penalty;
  const double sum = out.trustworthiness + out.continuity;
  out.combined = sum == 0.0 ? 0.0 : 2.0 * out.trustworthiness * out.continuity / sum;
  return out;
}

/// Harmonic mean of trustworthiness and continuity; higher is better.
inline double trustworthiness_continuity(const RankMatrix& data, const RankMatrix& proj, int k) {
  return trustworthiness_continuity_parts(data, proj, k).combined;
}

/// Mean of the false-neighbor and missing-neighbor relative rank errors; lower is better.
inline double mrre(const RankMatrix& data, const RankMatrix& proj, int k) {
  const Index n = data.size();
  detail::check_same_size(n, proj.size(), "mrre");
  require(k >= 1 && k <= n - 2, "mrre: k out of range");

  double false_sum = 0.0;
  double missing_sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (int r = 0; r < k; ++r) {
      const Index j = proj.order(i, r);
      false_sum += std::abs(double(data(i, j) - proj(i, j))) / data(i, j);
      const Index l = data.order(i, r);
      missing_sum += std::abs(double(data(i, l) - proj(i, l))) / proj(i, l);
    }
  }
  double c_k = 0.0;
  for (int l = 1; l <= k; ++l) c_k += std::abs(double(n - 2 * l + 1)) / l;
  c_k *= static_cast<double>(n);
  return 0.5 * (false_sum / c_k + missing_sum / c_k);
}

/// Normalized stress sqrt(sum (D - d)^2 / sum D^2) over unordered pairs.
template <typename Scalar>
Scalar stress(const DistanceMatrix<Scalar>& data, const DistanceMatrix<Scalar>& proj) {
  const Index n = data.size();
  detail::check_same_size(n, proj.size(), "stress");
  Scalar num = 0, den = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const Scalar diff = data(i, j) - proj(i, j);
      num += diff * diff;
      den += data(i, j) * data(i, j);
    }
  }
  if (!(den > 0)) throw InvalidArgument("stress: degenerate distances");
  return std::sqrt(num / den);
}

/// Mean over points of KL(P_i || Q_i) using Gaussian conditional neighbor
/// distributions computed on max-normalized distances.
template <typename Scalar>
Scalar kl_divergence(const DistanceMatrix<Scalar>& data, const DistanceMatrix<Scalar>& proj, Scalar sigma) {
  const Index n = data.size();
  detail::check_same_size(n, proj.size(), "kl_divergence");
  require(sigma > 0, "kl_divergence: sigma must be positive");
  const Scalar data_max = data.values.maxCoeff();
  const Scalar proj_max = proj.values.maxCoeff();
  if (!(data_max > 0) || !(proj_max > 0)) throw InvalidArgument("kl_divergence: degenerate distances");

  const Scalar inv_two_sigma_sq = Scalar(1) / (Scalar(2) * sigma * sigma);
  // log p_{j|i} via log-sum-exp so that small sigma does not underflow.
  auto log_conditionals = [&](const DistanceMatrix<Scalar>& dist, Scalar scale, Index i, Vector<Scalar>& out) {
    Scalar peak = -std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const Scalar d = dist(i, j) / scale;
      out(j) = -d * d * inv_two_sigma_sq;
      peak = std::max(peak, out(j));
    }
    Scalar total = 0;
    for (Index j = 0; j < n; ++j)
      if (j != i) total += std::exp(out(j) - peak);
    const Scalar log_z = peak + std::log(total);
    for (Index j = 0; j < n; ++j)
      if (j != i) out(j) -= log_z;
  };

  Vector<Scalar> log_p(n), log_q(n);
  Scalar sum = 0;
  for (Index i = 0; i < n; ++i) {
    log_conditionals(data, data_max, i, log_p);
    log_conditionals(proj, proj_max, i, log_q);
    Scalar row = 0;
    for (Index j = 0; j < n; ++j)
      if (j != i) row += std::exp(log_p(j)) * (log_p(j) - log_q(j));
    sum += std::max(row, Scalar(0));  // rounding can push an exact zero slightly negative
  }
  return sum / Scalar(n);
}

/// Fraction of points whose nearest class centroid (ties to own class) is their own.
template <typename Derived>
typename Derived::Scalar distance_consistency(const Eigen::MatrixBase<Derived>& coords, std::span<const int> labels) {
  using Scalar = typename Derived::Scalar;
  const Index n = coords.rows();
  require(static_cast<Index>(labels.size()) == n, "distance_consistency: label count mismatch");
  int classes = 0;
  const std::vector<int> cls = detail::compact_labels(labels, classes);
  detail::check_classes(classes, "distance_consistency");

  Matrix<Scalar> centroids = Matrix<Scalar>::Zero(classes, coords.cols());
  Vector<Scalar> counts = Vector<Scalar>::Zero(classes);
  for (Index i = 0; i < n; ++i) {
    centroids.row(cls[i]) += coords.row(i);
    counts(cls[i]) += 1;
  }
  for (int c = 0; c < classes; ++c) centroids.row(c) /= counts(c);

  Index consistent = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar own = (coords.row(i) - centroids.row(cls[i])).squaredNorm();
    bool ok = true;
    for (int c = 0; c < classes && ok; ++c)
      if (c != cls[i] && (coords.row(i) - centroids.row(c)).squaredNorm() < own) ok = false;
    consistent += ok ? 1 : 0;
  }
  return Scalar(consistent) / Scalar(n);
}

/// Mean silhouette over points, classes as clusters; singleton classes score 0.
template <typename Scalar>
Scalar silhouette(const DistanceMatrix<Scalar>& dist, std::span<const int> labels) {
  const Index n = dist.size();
  require(static_cast<Index>(labels.size()) == n, "silhouette: label count mismatch");
  int classes = 0;
  const std::vector<int> cls = detail::compact_labels(labels, classes);
  detail::check_classes(classes, "silhouette");

  std::vector<Index> sizes(static_cast<std::size_t>(classes), 0);
  for (int c : cls) ++sizes[static_cast<std::size_t>(c)];

  Vector<Scalar> sums(classes);
  Scalar total = 0;
  for (Index i = 0; i < n; ++i) {
    const int own = cls[i];
    if (sizes[static_cast<std::size_t>(own)] == 1) continue;
    sums.setZero();
    for (Index j = 0; j < n; ++j) sums(cls[j]) += dist(i, j);
    const Scalar a = sums(own) / Scalar(sizes[static_cast<std::size_t>(own)] - 1);
    Scalar b = std::numeric_limits<Scalar>::infinity();
    for (int c = 0; c < classes; ++c)
      if (c != own) b = std::min(b, sums(c) / Scalar(sizes[static_cast<std::size_t>(c)]));
    const Scalar m = std::max(a, b);
    if (m > 0) total += (b - a) / m;
  }
  return total / Scalar(n);
}

/// 1 - mean_i max(0, f_data(i) - f_proj(i)), f the same-label fraction among k neighbors.
inline double label_trustworthiness(const RankMatrix& data, const RankMatrix& proj, std::span<const int> labels,
                                    int k) {
  const Index n = data.size();
  detail::check_same_size(n, proj.size(), "label_trustworthiness");
  require(static_cast<Index>(labels.size()) == n, "label_trustworthiness: label count mismatch");
  require(k >= 1 && k <= n - 2, "label_trustworthiness: k out of range");
  int classes = 0;
  detail::compact_labels(labels, classes);
  detail::check_classes(classes, "label_trustworthiness");

  double loss = 0.0;
  for (Index i = 0; i < n; ++i) {
    int same_data = 0, same_proj = 0;
    for (int r = 0; r < k; ++r) {
      same_data += labels[static_cast<std::size_t>(data.order(i, r))] == labels[static_cast<std::size_t>(i)];
      same_proj += labels[static_cast<std::size_t>(proj.order(i, r))] == labels[static_cast<std::size_t>(i)];
    }
    loss += std::max(0, same_data - same_proj) / static_cast<double>(k);
  }
  return 1.0 - loss / static_cast<double>(n);
}

/// Mean absolute difference of SNN similarities over unordered pairs.
template <typename Scalar>
Scalar neighbor_dissimilarity(const Matrix<Scalar>& snn_data, const Matrix<Scalar>& snn_proj) {
  const Index n = snn_data.rows();
  require(snn_data.cols() == n && snn_proj.rows() == n && snn_proj.cols() == n,
          "neighbor_dissimilarity: shape mismatch");
  require(n >= 2, "neighbor_dissimilarity: need at least 2 points");
  Scalar sum = 0;
  for (Index j = 1; j < n; ++j)
    for (Index i = 0; i < j; ++i) sum += std::abs(snn_data(i, j) - snn_proj(i, j));
  return sum / (Scalar(n) * Scalar(n - 1) / Scalar(2));
}

}  // namespace dreval
