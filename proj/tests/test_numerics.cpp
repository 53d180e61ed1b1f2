#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "vemmg/numerics.hpp"

using namespace vemmg;
using numerics::SparseSymMatrix;
using numerics::Triplet;

namespace {

SparseSymMatrix identity(int n) {
  std::vector<Triplet> ts;
  for (int i = 0; i < n; ++i) ts.push_back({i, i, 1.0});
  return SparseSymMatrix::from_triplets(n, std::move(ts));
}

// random dense SPD matrix, returned both as dense and sparse-symmetric
std::pair<Eigen::MatrixXd, SparseSymMatrix> random_spd(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  Eigen::MatrixXd a = m.transpose() * m + n * Eigen::MatrixXd::Identity(n, n);
  std::vector<Triplet> ts;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) ts.push_back({i, j, a(i, j)});
  return {a, SparseSymMatrix::from_triplets(n, std::move(ts))};
}

} // namespace

TEST_CASE("spmv: identity and zero") {
  auto I = identity(5);
  Eigen::VectorXd x(5);
  x << 1, -2, 3, 0.5, 4;
  CHECK((I.multiply(x) - x).norm() == 0.0);
  CHECK(I.multiply(Eigen::VectorXd::Zero(5)).norm() == 0.0);
  CHECK_THROWS_AS(I.multiply(Eigen::VectorXd::Zero(4)), DimensionMismatch);
}

TEST_CASE("spmv: random symmetric vs dense oracle") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  int n = 30;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  std::vector<Triplet> ts;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      if ((i + j) % 3 == 0) continue; // keep it sparse
      double v = g(rng);
      a(i, j) = v;
      a(j, i) = v;
      ts.push_back({i, j, v});
    }
  auto A = SparseSymMatrix::from_triplets(n, std::move(ts));
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = g(rng);
  CHECK((A.multiply(x) - a * x).norm() <= 1e-13 * (a * x).norm());
}

TEST_CASE("from_triplets: duplicates summed, either triangle accepted") {
  std::vector<Triplet> ts = {{0, 1, 2.0}, {1, 0, 3.0}, {0, 0, 1.0}, {1, 1, 1.0}};
  auto A = SparseSymMatrix::from_triplets(2, std::move(ts));
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  Eigen::VectorXd y = A.multiply(x);
  CHECK(y[0] == doctest::Approx(6.0)); // 1 + (2+3)
  CHECK(y[1] == doctest::Approx(6.0));
}

TEST_CASE("cholesky_solve: identity, diagonal, dense oracle") {
  Eigen::VectorXd b(3);
  b << 1, 2, 3;
  CHECK((numerics::cholesky_solve(identity(3), b) - b).norm() <= 1e-14);

  auto D = SparseSymMatrix::from_triplets(1, {{0, 0, 4.0}});
  Eigen::VectorXd b1(1);
  b1 << 8.0;
  CHECK(numerics::cholesky_solve(D, b1)[0] == doctest::Approx(2.0).epsilon(1e-14));

  auto [dense, sparse] = random_spd(40, 7);
  Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(40, -1.0, 1.0);
  Eigen::VectorXd x = numerics::cholesky_solve(sparse, rhs);
  Eigen::VectorXd ref = dense.ldlt().solve(rhs);
  CHECK((x - ref).norm() <= 1e-10 * ref.norm());
  CHECK((sparse.multiply(x) - rhs).norm() <= 1e-12 * rhs.norm());
}

TEST_CASE("cholesky_solve: indefinite rejected") {
  auto A = SparseSymMatrix::from_triplets(2, {{0, 0, 1.0}, {1, 1, -1.0}});
  Eigen::VectorXd b(2);
  b << 1, 1;
  CHECK_THROWS_AS(numerics::cholesky_solve(A, b), NotPositiveDefinite);
}

TEST_CASE("cg_solve: trivial cases and agreement with cholesky") {
  Eigen::VectorXd b(4);
  b << 1, 2, 3, 4;
  Eigen::VectorXd x = numerics::cg_solve(identity(4), b, 1e-12, 10);
  CHECK((x - b).norm() <= 1e-12);

  CHECK(numerics::cg_solve(identity(4), Eigen::VectorXd::Zero(4), 1e-12, 10).norm() == 0.0);

  auto [dense, sparse] = random_spd(50, 11);
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(50);
  Eigen::VectorXd xcg = numerics::cg_solve(sparse, rhs, 1e-12, 500);
  Eigen::VectorXd xch = numerics::cholesky_solve(sparse, rhs);
  CHECK((xcg - xch).norm() <= 1e-11 * xch.norm());

  CHECK_THROWS_AS(numerics::cg_solve(sparse, rhs, 1e-14, 1), CgStagnation);
}
