#ifndef REGOPT_MODELS_HPP
#define REGOPT_MODELS_HPP

#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

#include "regopt/quasinewton.hpp"
#include "regopt/regularizers.hpp"

namespace regopt {

/// Immutable per-iteration snapshot consumed by the model algebra.
/// Invariant: nu = theta1 / (norm_estimate(B) + sigma), sigma > 0,
/// theta1 in (0, 1).
struct ModelContext {
  const Eigen::VectorXd& x;
  double fx;
  double hx;
  const Eigen::VectorXd& gx;
  const HessianModel& B;
  const Regularizer& h;
  double sigma;
  double nu;
  double theta1;
};

/// Quadratic model phi(s) = f(x) + g^T s + (1/2) s^T B s.
inline double phi_value(const ModelContext& ctx, const Eigen::VectorXd& s) {
  if (s.size() != ctx.x.size()) throw std::invalid_argument("phi_value: dimension mismatch");
  return ctx.fx + ctx.gx.dot(s) + 0.5 * s.dot(ctx.B.apply(s));
}

/// Full regularized model m(s) = phi(s) + (sigma/2) ||s||^2 + h(x + s).
/// Returns +inf when h does.
inline double model_value(const ModelContext& ctx, const Eigen::VectorXd& s) {
  return phi_value(ctx, s) + 0.5 * ctx.sigma * s.squaredNorm() + ctx.h.value(ctx.x + s);
}

struct CauchyResult {
  Eigen::VectorXd step;   ///< s_cp, one proximal-gradient step
  double xi;              ///< Cauchy model decrease; -inf if h(x + s_cp) = +inf
  double h_at_step;       ///< h(x + s_cp), reusable by the caller
};

/// One proximal-gradient step on the first-order model:
///   s_cp = prox(h, nu, x - nu g) - x,
///   xi_cp = f(x) + h(x) - (f(x) + g^T s_cp + h(x + s_cp)).
///
/// xi_cp is nonnegative up to roundoff; tiny negative values are clamped to
/// zero and larger ones raise a numerical-inconsistency error.  When the
/// prox oracle is inconsistent with the value oracle (hand-built models),
/// h(x + s_cp) may be +inf; the certificate is then reported as -inf and the
/// caller is expected to follow the extended-arithmetic path.
inline CauchyResult cauchy_step(const ModelContext& ctx) {
  const Eigen::VectorXd y = ctx.h.prox(ctx.nu, ctx.x - ctx.nu * ctx.gx);
  Eigen::VectorXd s = y - ctx.x;
  const double h_y = ctx.h.value(y);
  double xi = (ctx.hx - h_y) - ctx.gx.dot(s);
  if (std::isfinite(xi)) {
    const double tol = 1e-12 * (1.0 + std::abs(ctx.fx + ctx.hx));
    if (xi < -tol)
      throw std::runtime_error("cauchy_step: negative Cauchy decrease (inconsistent oracle)");
    if (xi < 0.0) xi = 0.0;
  } else {
    xi = -kInf;
  }
  return {std::move(s), xi, h_y};
}

/// Stationarity measure sqrt(xi_cp / nu); generalizes ||grad f|| to the
/// nonsmooth setting.
inline double stationarity_measure(double xi_cp, double nu) {
  if (!(xi_cp >= 0.0)) throw std::invalid_argument("stationarity_measure: xi_cp must be >= 0");
  if (!(nu > 0.0)) throw std::invalid_argument("stationarity_measure: nu must be > 0");
  return std::sqrt(xi_cp / nu);
}

/// Model decrease of the full model at a candidate step,
///   xi = f(x) + h(x) - (phi(s) + h(x + s));
/// the denominator quantity of the acceptance ratio.
inline double xi_full(const ModelContext& ctx, const Eigen::VectorXd& s) {
  return (ctx.fx + ctx.hx) - (phi_value(ctx, s) + ctx.h.value(ctx.x + s));
}

}  // namespace regopt

#endif  // REGOPT_MODELS_HPP
