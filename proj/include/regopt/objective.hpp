#ifndef REGOPT_OBJECTIVE_HPP
#define REGOPT_OBJECTIVE_HPP

#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

#include "regopt/linops.hpp"

namespace regopt {

/// Exact tallies of oracle calls made during a solve.  n_jprod counts
/// forward and adjoint applications of the residual Jacobian, wherever
/// they happen (gradient evaluation, Gauss-Newton products, norm
/// estimation).
struct EvalCounters {
  long n_f = 0;
  long n_grad = 0;
  long n_jprod = 0;
};

/// Wraps a map so every forward/adjoint application ticks the shared
/// Jacobian-product counter.
inline LinearMap counted_map(const LinearMap& base, std::shared_ptr<EvalCounters> counters) {
  return LinearMap(
      base.rows(), base.cols(),
      [base, counters](const Eigen::VectorXd& v) {
        ++counters->n_jprod;
        return base.apply(v);
      },
      [base, counters](const Eigen::VectorXd& v) {
        ++counters->n_jprod;
        return base.apply_adjoint(v);
      });
}

/// Smooth term f of the composite objective, with optional least-squares
/// structure f = (1/2) ||F(x)||^2 exposed through a residual and Jacobian
/// operator factory.
class SmoothObjective {
 public:
  using ValueFn = std::function<double(const Eigen::VectorXd&)>;
  using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using JacobianFn = std::function<LinearMap(const Eigen::VectorXd&)>;

  SmoothObjective(Eigen::Index n, ValueFn f, GradFn grad,
                  std::shared_ptr<EvalCounters> counters = nullptr)
      : n_(n),
        f_(std::move(f)),
        grad_(std::move(grad)),
        counters_(counters ? std::move(counters) : std::make_shared<EvalCounters>()) {}

  Eigen::Index dim() const { return n_; }

  double value(const Eigen::VectorXd& x) {
    check_dim(x);
    ++counters_->n_f;
    return f_(x);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) {
    check_dim(x);
    ++counters_->n_grad;
    return grad_(x);
  }

  void set_residual(Eigen::Index residual_dim, ResidualFn residual, JacobianFn jacobian) {
    residual_dim_ = residual_dim;
    residual_ = std::move(residual);
    jacobian_ = std::move(jacobian);
  }

  bool has_residual() const { return static_cast<bool>(residual_); }
  Eigen::Index residual_dim() const { return residual_dim_; }

  Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
    require_residual();
    return residual_(x);
  }

  /// Jacobian of the residual at x, as a counting operator.
  LinearMap jacobian(const Eigen::VectorXd& x) const {
    require_residual();
    return jacobian_(x);
  }

  const EvalCounters& counters() const { return *counters_; }
  std::shared_ptr<EvalCounters> counters_ptr() const { return counters_; }
  void reset_counters() { *counters_ = EvalCounters{}; }

 private:
  void check_dim(const Eigen::VectorXd& x) const {
    if (x.size() != n_) throw std::invalid_argument("SmoothObjective: dimension mismatch");
  }
  void require_residual() const {
    if (!residual_) throw std::invalid_argument("SmoothObjective: no residual structure");
  }

  Eigen::Index n_;
  ValueFn f_;
  GradFn grad_;
  ResidualFn residual_;
  JacobianFn jacobian_;
  Eigen::Index residual_dim_ = 0;
  std::shared_ptr<EvalCounters> counters_;
};

}  // namespace regopt

#endif  // REGOPT_OBJECTIVE_HPP
