#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace regopt;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

void check_symmetry(const HessianModel& B, Rng& rng, int trials = 50) {
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd u = rng.normal_vector(B.dim());
    const Eigen::VectorXd v = rng.normal_vector(B.dim());
    const double lhs = B.apply(u).dot(v);
    const double rhs = u.dot(B.apply(v));
    REQUIRE(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs) + std::abs(rhs)));
  }
}

}  // namespace

TEST_CASE("zero and spectral apply", "[quasinewton]") {
  ZeroHessian Z(2);
  REQUIRE(Z.apply(vec2(1, -1)).isZero(0.0));
  REQUIRE(Z.norm_estimate() == 0.0);

  SpectralHessian S(2);
  S.update(vec2(1, 0), vec2(2, 0));  // tau = 2
  REQUIRE(S.factor() == Catch::Approx(2.0));
  REQUIRE(S.apply(vec2(1, -1)) == vec2(2, -2));
  REQUIRE(S.norm_estimate() == Catch::Approx(2.0));
}

TEST_CASE("spectral clamps the curvature ratio", "[quasinewton]") {
  SpectralHessian S(2);
  S.update(vec2(1, 0), vec2(1e12, 0));
  REQUIRE(S.factor() == Catch::Approx(1e8));
  S.update(vec2(1, 0), vec2(-5, 0));
  REQUIRE(S.factor() == Catch::Approx(1e-8));
}

TEST_CASE("dbfgs diagonal on the aligned pair", "[quasinewton]") {
  DbfgsDiagonalHessian D(2);
  const Eigen::VectorXd s = vec2(1, 1), y = vec2(2, 2);
  D.update(s, y);
  REQUIRE(*D.diagonal() == vec2(2, 2));
  REQUIRE(s.dot(D.apply(s)) == Catch::Approx(s.dot(y)));  // weak secant here

  // skipped on nonpositive curvature
  const Eigen::VectorXd d_before = *D.diagonal();
  D.update(vec2(1, 0), vec2(-1, 0));
  REQUIRE(*D.diagonal() == d_before);
}

TEST_CASE("dbfgs satisfies the weak secant equation for equal-magnitude steps",
          "[quasinewton]") {
  DbfgsDiagonalHessian D(3);
  Eigen::VectorXd s(3), y(3);
  s << 1, -1, 1;
  y = 2.0 * s;
  D.update(s, y);
  REQUIRE(s.dot(D.apply(s)) == Catch::Approx(s.dot(y)).epsilon(1e-12));
}

TEST_CASE("psb diagonal correction", "[quasinewton]") {
  PsbDiagonalHessian P(2);
  P.update(vec2(1, 0), vec2(3, 0));
  REQUIRE(*P.diagonal() == vec2(3, 1));
  const Eigen::VectorXd s = vec2(1, 0);
  REQUIRE(s.dot(P.apply(s)) == Catch::Approx(3.0));
}

TEST_CASE("weak secant equation after diagonal updates", "[quasinewton]") {
  Rng rng(314);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(49));
    Eigen::VectorXd s = rng.normal_vector(n);
    Eigen::VectorXd y = rng.normal_vector(n);
    if (s.dot(y) <= 1e-6 * s.norm() * y.norm()) y = s + 0.1 * y;  // keep curvature positive
    SpectralHessian spec(n);
    PsbDiagonalHessian psb(n);
    AndreiDiagonalHessian andrei(n);
    for (HessianModel* B : {static_cast<HessianModel*>(&spec), static_cast<HessianModel*>(&psb),
                            static_cast<HessianModel*>(&andrei)}) {
      B->update(s, y);
      const double sy = s.dot(y);
      REQUIRE(std::abs(s.dot(B->apply(s)) - sy) <= 1e-9 * std::abs(sy));
    }
  }
}

TEST_CASE("update rejects a zero step", "[quasinewton]") {
  SpectralHessian S(2);
  REQUIRE_THROWS_AS(S.update(Eigen::VectorXd::Zero(2), vec2(1, 1)), std::invalid_argument);
  LbfgsHessian L(2);
  REQUIRE_THROWS_AS(L.update(Eigen::VectorXd::Zero(2), vec2(1, 1)), std::invalid_argument);
}

TEST_CASE("lbfgs equals the densely assembled BFGS matrix", "[quasinewton]") {
  Rng rng(2718);
  for (const Eigen::Index n : {3, 8, 20}) {
    LbfgsHessian B(n, 10);
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
    for (int p = 0; p < 10; ++p) {
      Eigen::VectorXd s = rng.normal_vector(n);
      Eigen::VectorXd y = rng.normal_vector(n);
      if (s.dot(y) <= 0.1 * s.norm() * y.norm()) y = s + 0.2 * y;
      pairs.emplace_back(s, y);
      B.update(s, y);
    }
    const Eigen::MatrixXd D = regopt::testing::dense_bfgs(n, pairs);
    for (int t = 0; t < 100; ++t) {
      const Eigen::VectorXd v = rng.normal_vector(n);
      const Eigen::VectorXd lhs = B.apply(v);
      const Eigen::VectorXd rhs = D * v;
      REQUIRE((lhs - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()));
    }
  }
}

TEST_CASE("lbfgs skips flat pairs and stays positive definite", "[quasinewton]") {
  Rng rng(55);
  LbfgsHessian B(6, 3);
  // identity before any pair
  const Eigen::VectorXd v0 = rng.normal_vector(6);
  REQUIRE((B.apply(v0) - v0).norm() < 1e-14);

  B.update(Eigen::VectorXd::Ones(6), -Eigen::VectorXd::Ones(6));  // sy < 0: skipped
  REQUIRE(B.stored_pairs() == 0);

  for (int p = 0; p < 5; ++p) {
    Eigen::VectorXd s = rng.normal_vector(6);
    Eigen::VectorXd y = rng.normal_vector(6);
    if (s.dot(y) <= 0.1 * s.norm() * y.norm()) y = s + 0.3 * y;
    B.update(s, y);
  }
  REQUIRE(B.stored_pairs() == 3);  // memory eviction
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd v = rng.normal_vector(6);
    if (v.norm() == 0.0) continue;
    REQUIRE(v.dot(B.apply(v)) > 0.0);
  }
  check_symmetry(B, rng);
}

TEST_CASE("symmetry holds after update sequences for every kind", "[quasinewton]") {
  Rng rng(123);
  const Eigen::Index n = 7;
  SpectralHessian spec(n);
  PsbDiagonalHessian psb(n);
  AndreiDiagonalHessian andrei(n);
  DbfgsDiagonalHessian dbfgs(n);
  LbfgsHessian lbfgs(n, 4);
  for (int t = 0; t < 6; ++t) {
    Eigen::VectorXd s = rng.normal_vector(n);
    Eigen::VectorXd y = rng.normal_vector(n);
    for (HessianModel* B :
         {static_cast<HessianModel*>(&spec), static_cast<HessianModel*>(&psb),
          static_cast<HessianModel*>(&andrei), static_cast<HessianModel*>(&dbfgs),
          static_cast<HessianModel*>(&lbfgs)})
      B->update(s, y);
  }
  for (HessianModel* B :
       {static_cast<HessianModel*>(&spec), static_cast<HessianModel*>(&psb),
        static_cast<HessianModel*>(&andrei), static_cast<HessianModel*>(&dbfgs),
        static_cast<HessianModel*>(&lbfgs)})
    check_symmetry(*B, rng);
}

TEST_CASE("gauss-newton applies J^T J and has unit norm for orthonormal rows",
          "[quasinewton]") {
  GaussNewtonHessian I_op(dense_map(Eigen::MatrixXd::Identity(3, 3)));
  const Eigen::VectorXd v = vec2(1, -2).homogeneous();
  REQUIRE((I_op.apply(v) - v).norm() < 1e-14);

  GaussNewtonHessian G(random_orthonormal_rows(3, 8, 21));
  REQUIRE(G.norm_estimate() == Catch::Approx(1.0).margin(1e-6));

  Eigen::MatrixXd J(2, 3);
  J << 1, 2, 0, 0, 1, -1;
  GaussNewtonHessian G2{dense_map(J)};
  Rng rng(77);
  const Eigen::MatrixXd JtJ = J.transpose() * J;
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd u = rng.normal_vector(3);
    REQUIRE((G2.apply(u) - JtJ * u).norm() < 1e-12);
  }
  check_symmetry(G2, rng);
}

TEST_CASE("power iteration estimate lands in [0.9, 1.0] of the true norm", "[quasinewton]") {
  Rng rng(424242);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(49));
    const Eigen::MatrixXd M = regopt::testing::random_spd_matrix(n, rng);
    const double truth = regopt::testing::dense_spectral_norm(M);
    const double est = estimate_spectral_norm(
        [&M](const Eigen::VectorXd& v) -> Eigen::VectorXd { return M * v; }, n);
    REQUIRE(est <= truth * (1.0 + 1e-12));
    REQUIRE(est >= 0.9 * truth);
  }
}

TEST_CASE("lbfgs norm estimate is reported monotonically", "[quasinewton]") {
  Rng rng(8);
  LbfgsHessian B(5, 5);
  double last = B.norm_estimate();
  for (int t = 0; t < 4; ++t) {
    Eigen::VectorXd s = rng.normal_vector(5);
    Eigen::VectorXd y = rng.normal_vector(5);
    if (s.dot(y) <= 0.1 * s.norm() * y.norm()) y = s + 0.3 * y;
    B.update(s, y);
    const double now = B.norm_estimate();
    REQUIRE(now >= last);
    last = now;
  }
}
