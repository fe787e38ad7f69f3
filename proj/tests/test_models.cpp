#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace regopt;

namespace {

// lying value oracle paired with an identity prox; drives the
// inconsistency diagnostics
class InflatedValue final : public Regularizer {
 public:
  double value(const Eigen::VectorXd& y) const override { return 100.0 * y.lpNorm<1>(); }
  bool separable() const override { return true; }
  double weight() const override { return 0.0; }

 protected:
  Eigen::VectorXd do_prox(double, const Eigen::VectorXd& q) const override { return q; }
};

struct Fixture {
  Eigen::VectorXd x, g;
  double fx, hx;
  ZeroHessian B0;
  SpectralHessian Bspec;
  ZeroRegularizer hzero;

  Fixture(Eigen::VectorXd x_, double fx_, Eigen::VectorXd g_)
      : x(std::move(x_)), g(std::move(g_)), fx(fx_), hx(0.0), B0(x.size()), Bspec(x.size()) {}

  ModelContext ctx(const HessianModel& B, const Regularizer& h, double sigma, double nu,
                   double hx_in = 0.0) const {
    return ModelContext{x, fx, hx_in, g, B, h, sigma, nu, 0.999};
  }
};

}  // namespace

TEST_CASE("phi value", "[models]") {
  Eigen::VectorXd x(2), g(2), s(2);
  x << 0, 0;
  g << 1, 0;
  Fixture fix(x, 1.0, g);
  fix.Bspec.update(Eigen::VectorXd::Ones(2), 2.0 * Eigen::VectorXd::Ones(2));  // B = 2I

  s << 0, 0;
  REQUIRE(phi_value(fix.ctx(fix.B0, fix.hzero, 1.0, 0.5), s) == Catch::Approx(1.0));
  s << 3, -1;
  REQUIRE(phi_value(fix.ctx(fix.B0, fix.hzero, 1.0, 0.5), s) == Catch::Approx(1.0 + 3.0));
  s << 1, 1;
  REQUIRE(phi_value(fix.ctx(fix.Bspec, fix.hzero, 1.0, 0.5), s) == Catch::Approx(4.0));
  REQUIRE_THROWS_AS(phi_value(fix.ctx(fix.B0, fix.hzero, 1.0, 0.5), Eigen::VectorXd::Zero(3)),
                    std::invalid_argument);
}

TEST_CASE("model value includes the quadratic penalty and h", "[models]") {
  Eigen::VectorXd x(1), g(1), s(1);
  x << 0;
  g << 2;
  Fixture fix(x, 5.0, g);
  s << -1;
  REQUIRE(model_value(fix.ctx(fix.B0, fix.hzero, 1.0, 0.5), s) == Catch::Approx(5.0 - 2.0 + 0.5));

  s << 0;
  const L1Norm l1(3.0);
  REQUIRE(model_value(fix.ctx(fix.B0, l1, 1.0, 0.5, /*hx*/ 0.0), s) == Catch::Approx(5.0));

  regopt::testing::HalfSpaceIndicator wall(Eigen::VectorXd::Ones(1), 0.5);
  s << 1;  // crosses the wall
  REQUIRE(model_value(fix.ctx(fix.B0, wall, 1.0, 0.5), s) == kInf);
}

TEST_CASE("cauchy step reduces to a gradient step for h = 0", "[models]") {
  Eigen::VectorXd x(3), g(3);
  x << 1, -1, 2;
  g << 0.5, 2, -1;
  Fixture fix(x, 3.0, g);
  const double nu = 0.25;
  const CauchyResult cp = cauchy_step(fix.ctx(fix.B0, fix.hzero, 1.0, nu));
  REQUIRE((cp.step + nu * g).norm() < 1e-14);
  // xi_cp = -g^T s_cp = nu ||g||^2, so the measure recovers ||g|| exactly
  REQUIRE(cp.xi == Catch::Approx(nu * g.squaredNorm()));
  REQUIRE(stationarity_measure(cp.xi, nu) == Catch::Approx(g.norm()));
  REQUIRE(cp.xi >= 0.5 / nu * cp.step.squaredNorm() - 1e-12);
}

TEST_CASE("cauchy step is zero at a prox fixed point", "[models]") {
  Eigen::VectorXd x(2);
  x << 0, 0;
  Fixture fix(x, 1.0, Eigen::VectorXd::Zero(2));
  const L1Norm l1(1.0);
  const CauchyResult cp = cauchy_step(fix.ctx(fix.B0, l1, 1.0, 0.5));
  REQUIRE(cp.step.isZero(0.0));
  REQUIRE(cp.xi == 0.0);
  REQUIRE(stationarity_measure(cp.xi, 0.5) == 0.0);
}

TEST_CASE("cauchy step on the scalar l1 example", "[models]") {
  Eigen::VectorXd x(1), g(1);
  x << 0;
  g << 3;
  Fixture fix(x, 0.0, g);
  const L1Norm l1(1.0);
  const CauchyResult cp = cauchy_step(fix.ctx(fix.B0, l1, 1.0, 1.0));
  REQUIRE(cp.step[0] == Catch::Approx(-2.0));
  REQUIRE(cp.xi == Catch::Approx(4.0));  // 0 - (-6 + 2)
}

TEST_CASE("cauchy step flags inconsistent oracles", "[models]") {
  Eigen::VectorXd x(1), g(1);
  x << 0;
  g << 1;
  Fixture fix(x, 0.0, g);
  const InflatedValue lying;
  REQUIRE_THROWS_AS(cauchy_step(fix.ctx(fix.B0, lying, 1.0, 1.0)), std::runtime_error);
}

TEST_CASE("cauchy step propagates an infinite model value", "[models]") {
  Eigen::VectorXd x(1), g(1);
  x << 0;
  g << -3;  // pulls past the wall at 0.5
  Fixture fix(x, 0.0, g);
  regopt::testing::HalfSpaceIndicator wall(Eigen::VectorXd::Ones(1), 0.5);
  const CauchyResult cp = cauchy_step(fix.ctx(fix.B0, wall, 1.0, 1.0));
  REQUIRE(cp.step[0] == Catch::Approx(3.0));
  REQUIRE(cp.xi == -kInf);
}

TEST_CASE("stationarity measure formula and preconditions", "[models]") {
  REQUIRE(stationarity_measure(4.0, 1.0) == Catch::Approx(2.0));
  REQUIRE(stationarity_measure(0.0, 2.0) == 0.0);
  REQUIRE_THROWS_AS(stationarity_measure(-1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(stationarity_measure(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("xi_full examples", "[models]") {
  Eigen::VectorXd x(1), g(1), s(1);
  x << 0;
  g << 1;
  Fixture fix(x, 0.0, g);
  s << 0;
  REQUIRE(xi_full(fix.ctx(fix.B0, fix.hzero, 1.0, 0.5), s) == 0.0);
  s << -1;
  REQUIRE(xi_full(fix.ctx(fix.B0, fix.hzero, 1.0, 0.5), s) == Catch::Approx(1.0));
}

TEST_CASE("xi_full equals xi_cp at the cauchy step when B = 0", "[models]") {
  Rng rng(64);
  Eigen::VectorXd x = rng.normal_vector(4);
  Eigen::VectorXd g = rng.normal_vector(4);
  const L1Norm l1(0.7);
  Fixture fix(x, 2.0, g);
  const double hx = l1.value(x);
  const auto ctx = fix.ctx(fix.B0, l1, 1.0, 0.4, hx);
  const CauchyResult cp = cauchy_step(ctx);
  REQUIRE(xi_full(ctx, cp.step) == Catch::Approx(cp.xi).epsilon(1e-12));
}

TEST_CASE("cauchy model optimality against random steps", "[models]") {
  Rng rng(512);
  for (int inst = 0; inst < 10; ++inst) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(9));
    Eigen::VectorXd x = rng.normal_vector(n);
    Eigen::VectorXd g = rng.normal_vector(n);
    const double nu = rng.uniform(0.05, 2.0);
    const L1Norm l1(rng.uniform(0.1, 2.0));
    Fixture fix(x, 1.0, g);
    const double hx = l1.value(x);
    const auto ctx = fix.ctx(fix.B0, l1, 1.0, nu, hx);
    const CauchyResult cp = cauchy_step(ctx);
    auto m_cp = [&](const Eigen::VectorXd& s) {
      return g.dot(s) + 0.5 / nu * s.squaredNorm() + l1.value(x + s);
    };
    const double at_cp = m_cp(cp.step);
    for (int t = 0; t < 100; ++t) REQUIRE(at_cp <= m_cp(rng.normal_vector(n)) + 1e-10);

    // the lower bound of the decrease certificate
    REQUIRE(cp.xi + 1e-10 * (1.0 + std::abs(cp.xi)) >= 0.5 / nu * cp.step.squaredNorm());
  }
}
