#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "dreval/common.hpp"

namespace dreval {

/// Symmetric Euclidean distances with zero diagonal.
template <typename Scalar>
struct DistanceMatrix {
  Matrix<Scalar> values;

  Index size() const { return values.rows(); }
  Scalar operator()(Index i, Index j) const { return values(i, j); }
};

/// ranks(i, j): 1-based rank of j among all points != i sorted by distance
/// from i, ties broken by ascending index. Diagonal holds 0.
/// order(i, r - 1) is the point holding rank r in row i.
struct RankMatrix {
  Eigen::MatrixXi ranks;
  Eigen::MatrixXi order;

  Index size() const { return ranks.rows(); }
  int operator()(Index i, Index j) const { return ranks(i, j); }
};

/// Rows list N_k(i) in ascending rank order.
struct KnnSets {
  int k = 0;
  std::vector<std::vector<Index>> sets;

  Index size() const { return static_cast<Index>(sets.size()); }
};

template <typename Derived>
DistanceMatrix<typename Derived::Scalar> pairwise_distances(const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  const Index n = points.rows();
  require(n >= 2, "pairwise_distances: need at least 2 points");
  require(points.allFinite(), "pairwise_distances: non-finite coordinate");

  DistanceMatrix<Scalar> dist{Matrix<Scalar>::Zero(n, n)};
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const Scalar d = (points.row(i) - points.row(j)).norm();
      dist.values(i, j) = d;
      dist.values(j, i) = d;
    }
  }
  return dist;
}

template <typename Scalar>
RankMatrix rank_matrix(const DistanceMatrix<Scalar>& dist) {
  const Index n = dist.size();
  require(n >= 2, "rank_matrix: need at least 2 points");

  RankMatrix out{Eigen::MatrixXi::Zero(n, n), Eigen::MatrixXi::Zero(n, n - 1)};
  std::vector<Index> idx(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (Index j = 0; j < n; ++j)
      if (j != i) idx[w++] = j;
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
      const Scalar da = dist.values(i, a), db = dist.values(i, b);
      return da < db || (da == db && a < b);
    });
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.ranks(i, idx[r]) = static_cast<int>(r + 1);
      out.order(i, static_cast<Index>(r)) = static_cast<int>(idx[r]);
    }
  }
  return out;
}

inline KnnSets knn_sets(const RankMatrix& rank, int k) {
  const Index n = rank.size();
  require(k >= 1 && k <= n - 2,
          "knn_sets: k=" + std::to_string(k) + " outside [1, " + std::to_string(n - 2) + "]");
  KnnSets out;
  out.k = k;
  out.sets.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto& row = out.sets[static_cast<std::size_t>(i)];
    row.reserve(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) row.push_back(rank.order(i, r));
  }
  return out;
}

/// Rank-weighted shared-nearest-neighbor similarity:
///   s_ij = sum_{m in N_k(i) & N_k(j)} (k+1-rho_i(m)) (k+1-rho_j(m)) / sum_{l=1..k} l^2
/// with rho_i(m) the position of m inside N_k(i). s_ii = 1.
template <typename Scalar = double>
Matrix<Scalar> snn_similarity(const KnnSets& knn, const RankMatrix& rank) {
  const Index n = knn.size();
  require(rank.size() == n, "snn_similarity: size mismatch");
  const int k = knn.k;

  // Weights are small integers, so the product below is exact and symmetric.
  Matrix<Scalar> weights = Matrix<Scalar>::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index m : knn.sets[static_cast<std::size_t>(i)]) weights(i, m) = Scalar(k + 1 - rank(i, m));

  Scalar z = 0;
  for (int l = 1; l <= k; ++l) z += Scalar(l) * Scalar(l);

  Matrix<Scalar> s = (weights * weights.transpose()) / z;
  s.diagonal().setOnes();
  return s;
}

}  // namespace dreval
