#ifndef REGOPT_QUASINEWTON_HPP
#define REGOPT_QUASINEWTON_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "regopt/linops.hpp"

namespace regopt {

/// Symmetric model Hessian B consumed by the quadratic model
/// f(x) + g^T s + (1/2) s^T B s.
///
/// Updates use the pair (s, y) with y the gradient difference; each kind has
/// its own acceptance rule and may silently skip a pair.  norm_estimate()
/// reports an inexact operator norm: exact for diagonal kinds, a seeded
/// power-iteration estimate otherwise.  Estimates are reported monotonically
/// (never decreasing across updates) so the step-length rule cannot loosen
/// when the operator barely changes.
class HessianModel {
 public:
  virtual ~HessianModel() = default;

  virtual Eigen::Index dim() const = 0;
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& v) const = 0;
  virtual void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) = 0;
  virtual double norm_estimate() const = 0;

  /// Diagonal view when the operator is diagonal, nullptr otherwise.
  virtual const Eigen::VectorXd* diagonal() const { return nullptr; }

  static constexpr double kCurvatureTol = 1e-12;

 protected:
  void check_pair(const Eigen::VectorXd& s, const Eigen::VectorXd& y) const {
    if (s.size() != dim() || y.size() != dim())
      throw std::invalid_argument("HessianModel::update: dimension mismatch");
    if (s.squaredNorm() == 0.0)
      throw std::invalid_argument("HessianModel::update: zero step");
  }
};

/// B = 0; the proximal-gradient (R2) model.
class ZeroHessian final : public HessianModel {
 public:
  explicit ZeroHessian(Eigen::Index n) : n_(n) {}
  Eigen::Index dim() const override { return n_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const override {
    if (v.size() != n_) throw std::invalid_argument("ZeroHessian::apply: dimension mismatch");
    return Eigen::VectorXd::Zero(n_);
  }
  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) override { check_pair(s, y); }
  double norm_estimate() const override { return 0.0; }

 private:
  Eigen::Index n_;
};

namespace detail {

inline double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace detail

/// Base for the diagonal updates; starts from the identity.
class DiagonalHessian : public HessianModel {
 public:
  explicit DiagonalHessian(Eigen::Index n) : d_(Eigen::VectorXd::Ones(n)) {}

  Eigen::Index dim() const override { return d_.size(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const override {
    if (v.size() != d_.size())
      throw std::invalid_argument("DiagonalHessian::apply: dimension mismatch");
    return d_.cwiseProduct(v);
  }
  double norm_estimate() const override { return d_.size() == 0 ? 0.0 : d_.cwiseAbs().maxCoeff(); }
  const Eigen::VectorXd* diagonal() const override { return &d_; }

 protected:
  Eigen::VectorXd d_;
};

/// Spectral update B = tau I with tau = s^T y / s^T s, clamped to
/// [1e-8, 1e8].  Being a multiple of the identity, it supports
/// non-separable regularizers in the closed-form diagonal solver.
class SpectralHessian final : public DiagonalHessian {
 public:
  explicit SpectralHessian(Eigen::Index n) : DiagonalHessian(n) {}

  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) override {
    check_pair(s, y);
    tau_ = detail::clamp(s.dot(y) / s.squaredNorm(), kTauMin, kTauMax);
    d_.setConstant(tau_);
  }

  double factor() const { return tau_; }

  static constexpr double kTauMin = 1e-8;
  static constexpr double kTauMax = 1e8;

 private:
  double tau_ = 1.0;
};

/// Least-Frobenius-change diagonal satisfying the weak secant equation
/// s^T B s = s^T y (the diagonal analogue of PSB).  May become indefinite;
/// entries are clamped to [-1e8, 1e8].
class PsbDiagonalHessian final : public DiagonalHessian {
 public:
  explicit PsbDiagonalHessian(Eigen::Index n) : DiagonalHessian(n) {}

  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) override {
    check_pair(s, y);
    const Eigen::ArrayXd s2 = s.array().square();
    const double denom = s2.square().sum();
    if (denom < 1e-30) return;
    const double gap = s.dot(y) - s2.matrix().dot(d_);
    d_ = (d_.array() + (gap / denom) * s2).cwiseMin(1e8).cwiseMax(-1e8).matrix();
  }
};

/// Diagonal update of Andrei (2019): shift the previous diagonal by -I and
/// correct along s .* s so the weak secant equation holds exactly.  May be
/// indefinite; entries are clamped to [-1e8, 1e8].
class AndreiDiagonalHessian final : public DiagonalHessian {
 public:
  explicit AndreiDiagonalHessian(Eigen::Index n) : DiagonalHessian(n) {}

  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) override {
    check_pair(s, y);
    const Eigen::ArrayXd s2 = s.array().square();
    const double denom = s2.square().sum();
    if (denom < 1e-30) return;
    const double gap = s.dot(y) - s2.matrix().dot(d_) + s.squaredNorm();
    d_ = (d_.array() - 1.0 + (gap / denom) * s2).cwiseMin(1e8).cwiseMax(-1e8).matrix();
  }
};

/// Diagonal BFGS-inspired update
///   D = (sum_i |y_i| / s^T y) * diag(|y|),
/// applied only when s^T y exceeds the curvature tolerance.  Stays
/// positive semi-definite; does not satisfy the weak secant equation in
/// general.
class DbfgsDiagonalHessian final : public DiagonalHessian {
 public:
  explicit DbfgsDiagonalHessian(Eigen::Index n) : DiagonalHessian(n) {}

  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) override {
    check_pair(s, y);
    const double sy = s.dot(y);
    if (!(sy > kCurvatureTol)) return;
    d_ = (y.array().abs() * (y.lpNorm<1>() / sy)).matrix();
  }
};

/// Limited-memory BFGS approximation of the Hessian.
///
/// The operator is represented as
///   B = gamma I + sum_i (a_i a_i^T - b_i b_i^T),
/// rebuilt from the stored pairs after every accepted update, with
/// a_i = y_i / sqrt(s_i^T y_i) and b_i = B_i s_i / sqrt(s_i^T B_i s_i)
/// accumulated in pair order.  The direct-form initial scaling
/// gamma = y^T y / s^T y comes from the most recent pair; the operator is
/// the identity before the first accepted pair.  Pairs with
/// s^T y <= tol ||s|| ||y|| are skipped, which keeps the operator positive
/// definite.
class LbfgsHessian final : public HessianModel {
 public:
  explicit LbfgsHessian(Eigen::Index n, int memory = 5) : n_(n), memory_(memory) {
    if (memory < 1) throw std::invalid_argument("LbfgsHessian: memory must be >= 1");
  }

  Eigen::Index dim() const override { return n_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const override {
    if (v.size() != n_) throw std::invalid_argument("LbfgsHessian::apply: dimension mismatch");
    Eigen::VectorXd out = gamma_ * v;
    for (std::size_t i = 0; i < a_.size(); ++i)
      out += a_[i] * a_[i].dot(v) - b_[i] * b_[i].dot(v);
    return out;
  }

  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) override {
    check_pair(s, y);
    const double sy = s.dot(y);
    if (!(sy > kCurvatureTol * s.norm() * y.norm())) return;
    pairs_.emplace_back(s, y);
    if (pairs_.size() > static_cast<std::size_t>(memory_)) pairs_.pop_front();
    gamma_ = y.squaredNorm() / sy;
    rebuild();
  }

  double norm_estimate() const override {
    const double raw = estimate_spectral_norm(
        [this](const Eigen::VectorXd& v) { return apply(v); }, n_, 20, 0x5eed5eedULL,
        &power_warm_);
    reported_norm_ = std::max(reported_norm_, raw);
    return reported_norm_;
  }

  int stored_pairs() const { return static_cast<int>(pairs_.size()); }

 private:
  void rebuild() {
    a_.clear();
    b_.clear();
    for (const auto& [s, y] : pairs_) {
      Eigen::VectorXd Bs = apply(s);  // operator with the pairs accumulated so far
      const double sBs = s.dot(Bs);
      if (!(sBs > 0.0)) continue;
      a_.push_back(y / std::sqrt(s.dot(y)));
      b_.push_back(Bs / std::sqrt(sBs));
    }
  }

  Eigen::Index n_;
  int memory_;
  double gamma_ = 1.0;
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs_;
  std::vector<Eigen::VectorXd> a_, b_;
  mutable double reported_norm_ = 0.0;
  mutable Eigen::VectorXd power_warm_;
};

/// Gauss-Newton operator B = J^T J for least-squares objectives.  update()
/// is a no-op; the Jacobian is replaced through set_jacobian as the iterate
/// moves, which resets the reported norm.
class GaussNewtonHessian final : public HessianModel {
 public:
  explicit GaussNewtonHessian(LinearMap J) : J_(std::move(J)) {}

  Eigen::Index dim() const override { return J_.cols(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const override {
    return J_.apply_adjoint(J_.apply(v));
  }

  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) override { check_pair(s, y); }

  void set_jacobian(LinearMap J) {
    J_ = std::move(J);
    norm_cached_ = false;
  }

  double norm_estimate() const override {
    if (!norm_cached_) {
      cached_norm_ = estimate_spectral_norm(
          [this](const Eigen::VectorXd& v) { return apply(v); }, J_.cols(), 20, 0x5eed5eedULL,
          &power_warm_);
      norm_cached_ = true;
    }
    return cached_norm_;
  }

 private:
  LinearMap J_;
  mutable double cached_norm_ = 0.0;
  mutable bool norm_cached_ = false;
  mutable Eigen::VectorXd power_warm_;
};

}  // namespace regopt

#endif  // REGOPT_QUASINEWTON_HPP
