#ifndef REGOPT_REGULARIZERS_HPP
#define REGOPT_REGULARIZERS_HPP

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>
#include <Eigen/SVD>

namespace regopt {

/// Nonsmooth term h of a composite objective f + h.
///
/// Implementations provide the value, the proximal operator
///   prox(nu, q) = argmin_y  h(y) + (1/(2 nu)) ||y - q||^2,
/// and, for separable h, the diagonally-weighted shifted prox used by the
/// closed-form diagonal solvers: coordinate-wise minimization of
///   g_i s + (1/2) d_i s^2 + h_i(x_i + s).
///
/// Values may be +inf (extended arithmetic).  Proximal evaluations are
/// tallied per instance; value() is not counted.
class Regularizer {
 public:
  virtual ~Regularizer() = default;

  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual bool separable() const = 0;
  virtual double weight() const = 0;

  Eigen::VectorXd prox(double nu, const Eigen::VectorXd& q) const {
    if (!(nu > 0.0)) throw std::invalid_argument("Regularizer::prox: step must be positive");
    if (!q.allFinite()) throw std::domain_error("Regularizer::prox: non-finite input");
    ++*prox_count_;
    return do_prox(nu, q);
  }

  /// Coordinate-wise minimizer s of g_i s + (1/2) d_i s^2 + h_i(x_i + s),
  /// all d_i > 0.  Counts as one proximal evaluation.
  Eigen::VectorXd shifted_prox_separable(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                         const Eigen::VectorXd& d) const {
    if (!separable())
      throw std::invalid_argument("shifted_prox_separable: regularizer is not separable");
    if (x.size() != g.size() || x.size() != d.size())
      throw std::invalid_argument("shifted_prox_separable: dimension mismatch");
    if (!(d.minCoeff() > 0.0))
      throw std::domain_error("shifted_prox_separable: nonconvex coordinate (d_i <= 0)");
    ++*prox_count_;
    return do_shifted_prox(x, g, d);
  }

  long prox_evals() const { return *prox_count_; }
  void reset_prox_evals() const { *prox_count_ = 0; }

 protected:
  virtual Eigen::VectorXd do_prox(double nu, const Eigen::VectorXd& q) const = 0;
  virtual Eigen::VectorXd do_shifted_prox(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                          const Eigen::VectorXd&) const {
    throw std::invalid_argument("shifted prox unsupported for this regularizer");
  }

  std::shared_ptr<long> prox_count_ = std::make_shared<long>(0);
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// h = 0.  prox is the identity.
class ZeroRegularizer final : public Regularizer {
 public:
  double value(const Eigen::VectorXd&) const override { return 0.0; }
  bool separable() const override { return true; }
  double weight() const override { return 0.0; }

 protected:
  Eigen::VectorXd do_prox(double, const Eigen::VectorXd& q) const override { return q; }
  Eigen::VectorXd do_shifted_prox(const Eigen::VectorXd&, const Eigen::VectorXd& g,
                                  const Eigen::VectorXd& d) const override {
    return (-g.array() / d.array()).matrix();
  }
};

/// h(x) = lambda * ||x||_0 with an exact-zero test.  The hard threshold
/// keeps q_i iff q_i^2 > 2 nu lambda; the tie resolves to 0.
class L0Norm final : public Regularizer {
 public:
  explicit L0Norm(double lambda) : lambda_(check_weight(lambda)) {}

  double value(const Eigen::VectorXd& x) const override {
    long nnz = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] != 0.0) ++nnz;
    return lambda_ * static_cast<double>(nnz);
  }
  bool separable() const override { return true; }
  double weight() const override { return lambda_; }

  static double hard_threshold(double q, double two_nu_lambda) {
    return q * q > two_nu_lambda ? q : 0.0;
  }

 protected:
  Eigen::VectorXd do_prox(double nu, const Eigen::VectorXd& q) const override {
    const double t = 2.0 * nu * lambda_;
    Eigen::VectorXd y(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) y[i] = hard_threshold(q[i], t);
    return y;
  }
  Eigen::VectorXd do_shifted_prox(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                  const Eigen::VectorXd& d) const override {
    Eigen::VectorXd s(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      s[i] = hard_threshold(x[i] - g[i] / d[i], 2.0 * lambda_ / d[i]) - x[i];
    return s;
  }

 private:
  static double check_weight(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("L0Norm: weight must be nonnegative");
    return lambda;
  }
  double lambda_;
};

/// h(x) = lambda * ||x||_1.  prox is the soft threshold.
class L1Norm final : public Regularizer {
 public:
  explicit L1Norm(double lambda) : lambda_(check_weight(lambda)) {}

  double value(const Eigen::VectorXd& x) const override { return lambda_ * x.lpNorm<1>(); }
  bool separable() const override { return true; }
  double weight() const override { return lambda_; }

  static double soft_threshold(double q, double t) {
    return q > t ? q - t : (q < -t ? q + t : 0.0);
  }

 protected:
  Eigen::VectorXd do_prox(double nu, const Eigen::VectorXd& q) const override {
    const double t = nu * lambda_;
    Eigen::VectorXd y(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) y[i] = soft_threshold(q[i], t);
    return y;
  }
  Eigen::VectorXd do_shifted_prox(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                  const Eigen::VectorXd& d) const override {
    Eigen::VectorXd s(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      s[i] = soft_threshold(x[i] - g[i] / d[i], lambda_ / d[i]) - x[i];
    return s;
  }

 private:
  static double check_weight(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("L1Norm: weight must be nonnegative");
    return lambda;
  }
  double lambda_;
};

namespace detail {

/// Deterministic SVD of a vectorized (column-major) rows x cols matrix.
inline Eigen::JacobiSVD<Eigen::MatrixXd> svd_of(const Eigen::VectorXd& x, Eigen::Index rows,
                                                Eigen::Index cols, const char* who) {
  if (x.size() != rows * cols)
    throw std::invalid_argument(std::string(who) + ": vector does not match declared matrix shape");
  Eigen::MatrixXd X = Eigen::Map<const Eigen::MatrixXd>(x.data(), rows, cols);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

inline Eigen::VectorXd recompose(const Eigen::JacobiSVD<Eigen::MatrixXd>& svd,
                                 const Eigen::VectorXd& sv, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd Y = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
  return Eigen::Map<const Eigen::VectorXd>(Y.data(), rows * cols);
}

}  // namespace detail

/// h(X) = lambda * ||X||_* (sum of singular values) on vectorized matrices.
/// prox soft-thresholds the singular values.
class NuclearNorm final : public Regularizer {
 public:
  NuclearNorm(Eigen::Index rows, Eigen::Index cols, double lambda)
      : rows_(rows), cols_(cols), lambda_(lambda) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("NuclearNorm: bad matrix shape");
    if (!(lambda >= 0.0)) throw std::invalid_argument("NuclearNorm: weight must be nonnegative");
  }

  double value(const Eigen::VectorXd& x) const override {
    return lambda_ * detail::svd_of(x, rows_, cols_, "NuclearNorm").singularValues().sum();
  }
  bool separable() const override { return false; }
  double weight() const override { return lambda_; }

 protected:
  Eigen::VectorXd do_prox(double nu, const Eigen::VectorXd& q) const override {
    auto svd = detail::svd_of(q, rows_, cols_, "NuclearNorm");
    Eigen::VectorXd sv = svd.singularValues();
    const double t = nu * lambda_;
    for (Eigen::Index i = 0; i < sv.size(); ++i) sv[i] = L1Norm::soft_threshold(sv[i], t);
    return detail::recompose(svd, sv, rows_, cols_);
  }

 private:
  Eigen::Index rows_, cols_;
  double lambda_;
};

/// h(X) = lambda * rank(X), counting singular values above
/// rank_tol = 1e-10 * sigma_max.  prox hard-thresholds the singular values
/// with the same tie rule as the l0 norm.
class RankPenalty final : public Regularizer {
 public:
  RankPenalty(Eigen::Index rows, Eigen::Index cols, double lambda)
      : rows_(rows), cols_(cols), lambda_(lambda) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("RankPenalty: bad matrix shape");
    if (!(lambda >= 0.0)) throw std::invalid_argument("RankPenalty: weight must be nonnegative");
  }

  double value(const Eigen::VectorXd& x) const override {
    const Eigen::VectorXd sv = detail::svd_of(x, rows_, cols_, "RankPenalty").singularValues();
    return lambda_ * static_cast<double>(rank_of(sv));
  }
  bool separable() const override { return false; }
  double weight() const override { return lambda_; }

  static long rank_of(const Eigen::VectorXd& singular_values) {
    if (singular_values.size() == 0) return 0;
    const double tol = 1e-10 * singular_values[0];
    long r = 0;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i)
      if (singular_values[i] > tol) ++r;
    return r;
  }

 protected:
  Eigen::VectorXd do_prox(double nu, const Eigen::VectorXd& q) const override {
    auto svd = detail::svd_of(q, rows_, cols_, "RankPenalty");
    Eigen::VectorXd sv = svd.singularValues();
    const double t = 2.0 * nu * lambda_;
    for (Eigen::Index i = 0; i < sv.size(); ++i) sv[i] = L0Norm::hard_threshold(sv[i], t);
    return detail::recompose(svd, sv, rows_, cols_);
  }

 private:
  Eigen::Index rows_, cols_;
  double lambda_;
};

/// View of h translated by a fixed offset: h_shift(s) = h(offset + s).
/// Used by the subproblem solvers, where the model of h is s -> h(x + s).
/// Proximal evaluations are forwarded to (and tallied on) the base
/// regularizer.
class ShiftedRegularizer final : public Regularizer {
 public:
  ShiftedRegularizer(const Regularizer& base, Eigen::VectorXd offset)
      : base_(base), offset_(std::move(offset)) {}

  double value(const Eigen::VectorXd& s) const override { return base_.value(offset_ + s); }
  bool separable() const override { return base_.separable(); }
  double weight() const override { return base_.weight(); }

 protected:
  Eigen::VectorXd do_prox(double nu, const Eigen::VectorXd& q) const override {
    return base_.prox(nu, offset_ + q) - offset_;
  }
  Eigen::VectorXd do_shifted_prox(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                  const Eigen::VectorXd& d) const override {
    return base_.shifted_prox_separable(offset_ + x, g, d);
  }

 private:
  const Regularizer& base_;
  Eigen::VectorXd offset_;
};

}  // namespace regopt

#endif  // REGOPT_REGULARIZERS_HPP
