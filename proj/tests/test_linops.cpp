#include <catch2/catch_amalgamated.hpp>

#include <Eigen/SVD>

#include "test_helpers.hpp"

using namespace regopt;

namespace {

void check_adjoint(const LinearMap& A, Rng& rng, int trials = 100) {
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd u = rng.normal_vector(A.cols());
    const Eigen::VectorXd v = rng.normal_vector(A.rows());
    const double lhs = A.apply(u).dot(v);
    const double rhs = u.dot(A.apply_adjoint(v));
    REQUIRE(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs) + std::abs(rhs)));
  }
}

}  // namespace

TEST_CASE("random orthonormal rows: 1x1 is a sign", "[linops]") {
  const Eigen::MatrixXd A = random_orthonormal_rows(1, 1, 0).to_dense();
  REQUIRE(std::abs(std::abs(A(0, 0)) - 1.0) < 1e-14);
}

TEST_CASE("random orthonormal rows: A A^T = I", "[linops]") {
  const LinearMap A = random_orthonormal_rows(3, 8, 7);
  const Eigen::MatrixXd D = A.to_dense();
  REQUIRE((D * D.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("random orthonormal rows: dimension precondition", "[linops]") {
  REQUIRE_THROWS_AS(random_orthonormal_rows(4, 3, 0), std::invalid_argument);
}

TEST_CASE("random orthonormal rows: unit spectral norm and adjoint", "[linops]") {
  const LinearMap A = random_orthonormal_rows(5, 12, 3);
  const Eigen::MatrixXd D = A.to_dense();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
  REQUIRE(std::abs(svd.singularValues()[0] - 1.0) < 1e-8);
  Rng rng(11);
  check_adjoint(A, rng);
}

TEST_CASE("random orthonormal rows: deterministic per seed", "[linops]") {
  const Eigen::MatrixXd A1 = random_orthonormal_rows(4, 9, 42).to_dense();
  const Eigen::MatrixXd A2 = random_orthonormal_rows(4, 9, 42).to_dense();
  REQUIRE(A1 == A2);
}

TEST_CASE("entry mask: full, empty, single entry", "[linops]") {
  using Idx = std::pair<Eigen::Index, Eigen::Index>;
  std::vector<Idx> all;
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) all.emplace_back(i, j);
  Eigen::VectorXd x(4);
  x << 3, 5, 4, 6;  // column-major [[3,4],[5,6]]

  REQUIRE(entry_mask(2, 2, all).apply(x) == x);
  REQUIRE(entry_mask(2, 2, {}).apply(x).isZero(0.0));

  const Eigen::VectorXd y = entry_mask(2, 2, {Idx{0, 0}}).apply(x);
  Eigen::VectorXd expect(4);
  expect << 3, 0, 0, 0;
  REQUIRE(y == expect);
}

TEST_CASE("entry mask: idempotent, self-adjoint, bounds-checked", "[linops]") {
  using Idx = std::pair<Eigen::Index, Eigen::Index>;
  const LinearMap P = entry_mask(3, 4, {Idx{0, 1}, Idx{2, 3}, Idx{1, 0}});
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd v = rng.normal_vector(12);
    const Eigen::VectorXd pv = P.apply(v);
    REQUIRE(P.apply(pv) == pv);
  }
  check_adjoint(P, rng);
  REQUIRE_THROWS_AS(entry_mask(3, 4, {Idx{3, 0}}), std::invalid_argument);
  REQUIRE_THROWS_AS(entry_mask(3, 4, {Idx{0, 4}}), std::invalid_argument);
}

TEST_CASE("blur operator: point kernel is the identity", "[linops]") {
  const LinearMap A = blur_operator(4, 0, 1.0);
  Rng rng(2);
  const Eigen::VectorXd v = rng.normal_vector(16);
  REQUIRE((A.apply(v) - v).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("blur operator: constant image fixed in the interior", "[linops]") {
  const Eigen::Index side = 6;
  const LinearMap A = blur_operator(side, 1, 0.8);
  const Eigen::VectorXd ones = Eigen::VectorXd::Constant(side * side, 1.0);
  const Eigen::VectorXd out = A.apply(ones);
  for (Eigen::Index i = 1; i + 1 < side; ++i)
    for (Eigen::Index j = 1; j + 1 < side; ++j)
      REQUIRE(std::abs(out[i + j * side] - 1.0) < 1e-12);
}

TEST_CASE("blur operator: delta image spreads the kernel", "[linops]") {
  const Eigen::Index side = 4;
  const int r = 1;
  const double sig = 1.0;
  const LinearMap A = blur_operator(side, r, sig);

  // independent kernel weights
  Eigen::MatrixXd w(3, 3);
  double total = 0.0;
  for (int di = -r; di <= r; ++di)
    for (int dj = -r; dj <= r; ++dj) {
      w(di + r, dj + r) = std::exp(-0.5 * (di * di + dj * dj) / (sig * sig));
      total += w(di + r, dj + r);
    }
  w /= total;

  // fully interior delta: every kernel weight lands on the grid
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(side * side);
  delta[1 + 1 * side] = 1.0;
  REQUIRE(std::abs(A.apply(delta).sum() - 1.0) < 1e-12);

  // corner delta: only the covered quadrant of the kernel survives
  delta.setZero();
  delta[0] = 1.0;
  const Eigen::VectorXd out = A.apply(delta);
  double covered = 0.0;
  for (int di = 0; di <= r; ++di)
    for (int dj = 0; dj <= r; ++dj) covered += w(di + r, dj + r);
  REQUIRE(std::abs(out.sum() - covered) < 1e-12);
  REQUIRE(std::abs(out[0] - w(r, r)) < 1e-14);
}

TEST_CASE("blur operator: adjoint consistency", "[linops]") {
  const LinearMap A = blur_operator(5, 2, 1.3);
  Rng rng(9);
  check_adjoint(A, rng);
}

TEST_CASE("blur operator: preconditions", "[linops]") {
  REQUIRE_THROWS_AS(blur_operator(0, 1, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(blur_operator(4, -1, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(blur_operator(4, 1, 0.0), std::invalid_argument);
}

TEST_CASE("dense map adjoint and dimension checks", "[linops]") {
  Eigen::MatrixXd M(2, 3);
  M << 1, 2, 3, 4, 5, 6;
  const LinearMap A = dense_map(M);
  Rng rng(4);
  check_adjoint(A, rng);
  REQUIRE_THROWS_AS(A.apply(Eigen::VectorXd::Zero(2)), std::invalid_argument);
  REQUIRE_THROWS_AS(A.apply_adjoint(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}
