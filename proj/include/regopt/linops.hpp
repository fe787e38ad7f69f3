#ifndef REGOPT_LINOPS_HPP
#define REGOPT_LINOPS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "regopt/rng.hpp"

namespace regopt {

/// Matrix-free linear operator with an explicit adjoint.
///
/// Values are immutable after construction; forward/adjoint are pure and
/// may be shared across threads.
class LinearMap {
 public:
  using Apply = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  LinearMap() = default;
  LinearMap(Eigen::Index n_rows, Eigen::Index n_cols, Apply forward, Apply adjoint)
      : n_rows_(n_rows), n_cols_(n_cols), forward_(std::move(forward)), adjoint_(std::move(adjoint)) {}

  Eigen::Index rows() const { return n_rows_; }
  Eigen::Index cols() const { return n_cols_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    if (v.size() != n_cols_) throw std::invalid_argument("LinearMap::apply: dimension mismatch");
    return forward_(v);
  }

  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& v) const {
    if (v.size() != n_rows_) throw std::invalid_argument("LinearMap::apply_adjoint: dimension mismatch");
    return adjoint_(v);
  }

  /// Dense materialization, intended for tests and small operators only.
  Eigen::MatrixXd to_dense() const {
    if (n_rows_ * n_cols_ > 1000000)
      throw std::invalid_argument("LinearMap::to_dense: operator too large to materialize");
    Eigen::MatrixXd M(n_rows_, n_cols_);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n_cols_);
    for (Eigen::Index j = 0; j < n_cols_; ++j) {
      e[j] = 1.0;
      M.col(j) = forward_(e);
      e[j] = 0.0;
    }
    return M;
  }

 private:
  Eigen::Index n_rows_ = 0;
  Eigen::Index n_cols_ = 0;
  Apply forward_;
  Apply adjoint_;
};

/// Dense map backed by an owned matrix.
inline LinearMap dense_map(Eigen::MatrixXd A) {
  auto M = std::make_shared<Eigen::MatrixXd>(std::move(A));
  return LinearMap(
      M->rows(), M->cols(),
      [M](const Eigen::VectorXd& v) -> Eigen::VectorXd { return (*M) * v; },
      [M](const Eigen::VectorXd& v) -> Eigen::VectorXd { return M->transpose() * v; });
}

/// m x n map A with A A^T = I_m, from the QR factorization of a seeded
/// Gaussian matrix.  Rows are sign-normalized so the draw is canonical.
inline LinearMap random_orthonormal_rows(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  if (m < 1 || m > n)
    throw std::invalid_argument("random_orthonormal_rows: need 1 <= m <= n");
  Rng rng(seed);
  Eigen::MatrixXd G(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  const Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(m, m).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < m; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return dense_map(Q.transpose());
}

/// Projection onto a set of observed entries of an n_rows x n_cols matrix,
/// acting on column-major vectorizations.  Indices are 0-based.  The map is
/// square, idempotent and self-adjoint.
inline LinearMap entry_mask(Eigen::Index n_rows, Eigen::Index n_cols,
                            const std::vector<std::pair<Eigen::Index, Eigen::Index>>& omega) {
  const Eigen::Index N = n_rows * n_cols;
  auto keep = std::make_shared<Eigen::ArrayXd>(Eigen::ArrayXd::Zero(N));
  for (const auto& [i, j] : omega) {
    if (i < 0 || i >= n_rows || j < 0 || j >= n_cols)
      throw std::invalid_argument("entry_mask: index out of range");
    (*keep)[i + j * n_rows] = 1.0;
  }
  auto project = [keep](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return (v.array() * (*keep)).matrix();
  };
  return LinearMap(N, N, project, project);
}

/// 2-D convolution on side x side images with a truncated, normalized
/// Gaussian kernel and zero-padded boundary.  Images are vectorized
/// column-major.  The kernel is symmetric, so the map is self-adjoint.
inline LinearMap blur_operator(Eigen::Index side, int kernel_radius, double kernel_sigma) {
  if (side < 1) throw std::invalid_argument("blur_operator: side must be >= 1");
  if (kernel_radius < 0) throw std::invalid_argument("blur_operator: kernel_radius must be >= 0");
  if (!(kernel_sigma > 0.0)) throw std::invalid_argument("blur_operator: kernel_sigma must be > 0");
  const int w = 2 * kernel_radius + 1;
  auto kernel = std::make_shared<Eigen::MatrixXd>(w, w);
  double total = 0.0;
  for (int di = -kernel_radius; di <= kernel_radius; ++di)
    for (int dj = -kernel_radius; dj <= kernel_radius; ++dj) {
      const double v = std::exp(-0.5 * (di * di + dj * dj) / (kernel_sigma * kernel_sigma));
      (*kernel)(di + kernel_radius, dj + kernel_radius) = v;
      total += v;
    }
  *kernel /= total;
  const Eigen::Index N = side * side;
  const int r = kernel_radius;
  auto conv = [kernel, side, r](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(side * side);
    for (Eigen::Index j = 0; j < side; ++j)
      for (Eigen::Index i = 0; i < side; ++i) {
        double acc = 0.0;
        for (int dj = -r; dj <= r; ++dj) {
          const Eigen::Index jj = j - dj;
          if (jj < 0 || jj >= side) continue;
          for (int di = -r; di <= r; ++di) {
            const Eigen::Index ii = i - di;
            if (ii < 0 || ii >= side) continue;
            acc += (*kernel)(di + r, dj + r) * v[ii + jj * side];
          }
        }
        out[i + j * side] = acc;
      }
    return out;
  };
  return LinearMap(N, N, conv, conv);
}

/// Spectral-norm estimate of a symmetric operator by power iteration with a
/// seeded start vector.  The returned value never exceeds the true norm.
/// When `warm` is given and holds a vector of the right size, the iteration
/// starts there instead and the final iterate is written back, so repeated
/// estimates of a slowly changing operator keep sharpening.
inline double estimate_spectral_norm(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
                                     Eigen::Index n, int iterations = 20,
                                     std::uint64_t seed = 0x5eed5eedULL,
                                     Eigen::VectorXd* warm = nullptr) {
  if (n == 0) return 0.0;
  Eigen::VectorXd v;
  if (warm && warm->size() == n) {
    v = *warm;
  } else {
    Rng rng(seed);
    v = rng.normal_vector(n);
  }
  double nv = v.norm();
  if (nv == 0.0) return 0.0;
  v /= nv;
  double best = 0.0;
  for (int t = 0; t < iterations; ++t) {
    Eigen::VectorXd w = op(v);
    const double nw = w.norm();
    if (nw > best) best = nw;
    if (nw <= 1e-300) break;  // operator annihilates the iterate
    v = w / nw;
  }
  if (warm) *warm = v;
  return best;
}

}  // namespace regopt

#endif  // REGOPT_LINOPS_HPP
