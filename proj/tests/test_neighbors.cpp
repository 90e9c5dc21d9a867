#include <doctest.h>

#include "dreval/neighbors.hpp"
#include "test_util.hpp"

using namespace dreval;

TEST_CASE("pairwise distances") {
  MatrixXd p(2, 2);
  p << 0, 0, 3, 4;
  const auto d = pairwise_distances(p);
  CHECK(d(0, 1) == 5.0);
  CHECK(d(1, 0) == 5.0);
  CHECK(d(0, 0) == 0.0);

  MatrixXd same(2, 3);
  same << 1, 2, 3, 1, 2, 3;
  CHECK(pairwise_distances(same)(0, 1) == 0.0);

  std::mt19937_64 rng(1);
  const MatrixXd r = testutil::random_points(10, 4, rng);
  const auto dr = pairwise_distances(r);
  const auto ref = oracle::distances(testutil::to_rows(r));
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 10; ++j) {
      CHECK(dr(i, j) == doctest::Approx(ref[i][j]).epsilon(1e-12));
      CHECK(dr(i, j) == dr(j, i));
    }
}

TEST_CASE("rank matrix ordering and ties") {
  MatrixXd line(3, 1);
  line << 0, 1, 3;
  const auto r = rank_matrix(pairwise_distances(line));
  CHECK(r(0, 1) == 1);
  CHECK(r(0, 2) == 2);
  CHECK(r(0, 0) == 0);

  const auto coincident = rank_matrix(pairwise_distances(MatrixXd::Zero(5, 2)));
  for (Index i = 0; i < 5; ++i) {
    int expected = 1;
    for (Index j = 0; j < 5; ++j)
      if (j != i) CHECK(coincident(i, j) == expected++);
  }

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    // Integer grid points produce many ties.
    MatrixXd p = testutil::random_points(8, 2, rng).array().round();
    const auto rk = rank_matrix(pairwise_distances(p));
    const auto ref = oracle::ranks(oracle::distances(testutil::to_rows(p)));
    for (Index i = 0; i < 8; ++i) {
      long sum = 0;
      for (Index j = 0; j < 8; ++j) {
        CHECK(rk(i, j) == ref[i][j]);
        sum += rk(i, j);
      }
      CHECK(sum == 7 * 8 / 2);
    }
  }
}

TEST_CASE("rank matrix is invariant under isometry and scaling") {
  std::mt19937_64 rng(3);
  const MatrixXd p = testutil::random_points(30, 2, rng);
  const auto base = rank_matrix(pairwise_distances(p));
  const Eigen::Matrix<double, Eigen::Dynamic, 2> moved = testutil::rigid_2d(p, 0.7, 3.0, -1.0);
  CHECK(rank_matrix(pairwise_distances(moved)).ranks == base.ranks);
  const MatrixXd scaled = 4.0 * p;
  const auto ds = pairwise_distances(scaled);
  const auto d = pairwise_distances(p);
  CHECK(rank_matrix(ds).ranks == base.ranks);
  CHECK((ds.values - 4.0 * d.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("knn sets") {
  MatrixXd line(3, 1);
  line << 0, 1, 3;
  const auto r = rank_matrix(pairwise_distances(line));
  const auto k1 = knn_sets(r, 1);
  CHECK(k1.sets[1] == std::vector<Index>{0});

  std::mt19937_64 rng(4);
  const MatrixXd p = testutil::random_points(9, 3, rng);
  const auto rk = rank_matrix(pairwise_distances(p));
  const auto far = knn_sets(rk, 7);
  for (Index i = 0; i < 9; ++i) {
    CHECK(far.sets[static_cast<std::size_t>(i)].size() == 7);
    for (Index j : far.sets[static_cast<std::size_t>(i)]) {
      CHECK(j != i);
      CHECK(rk(i, j) <= 7);
    }
  }
  CHECK_THROWS(knn_sets(rk, 0));
  CHECK_THROWS(knn_sets(rk, 8));
}

TEST_CASE("snn similarity") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd p = testutil::random_points(8, 3, rng);
    const auto rk = rank_matrix(pairwise_distances(p));
    for (int k = 1; k <= 6; ++k) {
      const auto s = snn_similarity(knn_sets(rk, k), rk);
      const auto ref = oracle::snn(oracle::ranks(oracle::distances(testutil::to_rows(p))), k);
      for (Index i = 0; i < 8; ++i)
        for (Index j = 0; j < 8; ++j) {
          CHECK(s(i, j) == doctest::Approx(ref[i][j]).epsilon(1e-12));
          CHECK(s(i, j) == s(j, i));
          CHECK(s(i, j) >= 0.0);
          CHECK(s(i, j) <= 1.0);
        }
    }
  }

  // Line 0 (i), 1 (m), -1.5 (a), 3.2 (j), 4.0 (b). With k = 2, N(i) = {m, a}
  // and N(j) = {b, m}: one shared neighbor ranked 1 by i and 2 by j.
  MatrixXd line(5, 1);
  line << 0.0, 1.0, -1.5, 3.2, 4.0;
  const auto rk = rank_matrix(pairwise_distances(line));
  const auto s2 = snn_similarity(knn_sets(rk, 2), rk);
  CHECK(s2(0, 3) == doctest::Approx(2.0 / 5.0));
  CHECK(s2(0, 0) == 1.0);
  const auto s1 = snn_similarity(knn_sets(rk, 1), rk);
  CHECK(s1(0, 3) == 0.0);  // N(i) = {m}, N(j) = {b}
  CHECK(s1(1, 2) == 1.0);  // both have N = {i}
}
